"""Per-vertex SRT-router: the greedy low-discrepancy neighbour sequence.

At vertex ``v`` with ``i`` tokens already served, the candidates are the
neighbours ``u`` with ``c[v,u] - (i+1) P[v,u] < 0``; the one minimising
``(c[v,u] + 1) / P[v,u]`` is emitted, ties going to the earliest neighbour
in the prescribed order.  Uniform rows reduce this to a rotor-router.

The selection is evaluated in plain double precision.  Assertions on the
discrepancy carry slack; the rule itself never does.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

from .markov import TransitionMatrix, validate

COUNTER_CAP = 2**53
TIE_ORDERS = ("asc", "desc")


class EmptyCandidateSet(RuntimeError):
    """No neighbour passed the candidate test; floating-point pathology."""

    def __init__(self, v, i):
        super().__init__(f"empty candidate set at vertex {v}, serve index {i}")
        self.vertex = v
        self.index = i


class CounterOverflow(OverflowError):
    pass


@njit(cache=True)
def _emit(v, count, indptr, probs, counts, served, flow, record):
    # returns the number of emissions completed (count on success)
    lo = indptr[v]
    hi = indptr[v + 1]
    for j in range(count):
        i = served[v]
        best = -1
        best_key = np.inf
        for e in range(lo, hi):
            c = counts[e]
            p = probs[e]
            if c - (i + 1) * p < 0.0:
                key = (c + 1) / p
                if key < best_key:
                    best_key = key
                    best = e
        if best < 0:
            return j
        counts[best] += 1
        served[v] = i + 1
        flow[best] += 1
        if record.shape[0] > 0:
            record[j] = best
    return count


@njit(cache=True)
def _route(chi, indptr, indices, probs, counts, served, flow, chi_next):
    # returns -1 on success, else the vertex whose candidate set was empty
    empty = np.zeros(0, dtype=np.int64)
    for v in range(chi.shape[0]):
        k = chi[v]
        if k > 0:
            done = _emit(v, k, indptr, probs, counts, served, flow, empty)
            if done < k:
                return v
    for e in range(indices.shape[0]):
        chi_next[indices[e]] += flow[e]
    return -1


class RouterState:
    """Serve counters for every vertex of a chain.

    ``served[v]`` is X_v, the number of σ_v values emitted so far, and the
    per-neighbour count c[v,u] is kept in CSR order alongside the support.
    """

    def __init__(self, P, tie_order: str = "asc", trace=None):
        if not isinstance(P, TransitionMatrix):
            P = validate(P)
        if tie_order not in TIE_ORDERS:
            raise ValueError(f"tie_order must be one of {TIE_ORDERS}")
        self.P = P
        self.tie_order = tie_order
        self.trace = trace
        n = P.n
        order = [list(s) if tie_order == "asc" else list(reversed(s)) for s in P.support]
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        self.indptr[1:] = np.cumsum([len(s) for s in order])
        self.indices = np.array([u for s in order for u in s], dtype=np.int64)
        self.owner = np.repeat(np.arange(n, dtype=np.int64), np.diff(self.indptr))
        self.probs = P.rows[self.owner, self.indices].copy()
        self.counts = np.zeros(len(self.indices), dtype=np.int64)
        self.served = np.zeros(n, dtype=np.int64)
        self._slot = {(int(v), int(u)): e for e, (v, u) in enumerate(zip(self.owner, self.indices))}

    @property
    def n(self) -> int:
        return self.P.n

    def copy(self) -> "RouterState":
        other = object.__new__(RouterState)
        other.__dict__.update(self.__dict__)
        other.counts = self.counts.copy()
        other.served = self.served.copy()
        other.trace = None
        return other

    def count(self, v: int, u: int) -> int:
        e = self._slot.get((v, u))
        return 0 if e is None else int(self.counts[e])

    def _guard(self, v, count):
        if self.served[v] + count > COUNTER_CAP:
            raise CounterOverflow(f"vertex {v} would exceed {COUNTER_CAP} serves")

    def _serve_into(self, v, count, flow):
        self._guard(v, count)
        start = int(self.served[v])
        record = np.zeros(count if self.trace is not None else 0, dtype=np.int64)
        done = _emit(v, count, self.indptr, self.probs, self.counts, self.served, flow, record)
        if self.trace is not None:
            for j in range(done):
                self.trace.write(f"{v} {start + j} {self.indices[record[j]]}\n")
        if done < count:
            raise EmptyCandidateSet(v, start + done)

    def next(self, v: int) -> int:
        """Emit σ_v(X_v) and advance the counters."""
        flow = np.zeros(len(self.indices), dtype=np.int64)
        self._serve_into(v, 1, flow)
        return int(self.indices[np.flatnonzero(flow)[0]])

    def serve(self, v: int, count: int) -> dict:
        """Emit ``count`` tokens from ``v``; returns ``{u: tokens sent to u}``."""
        if count < 0:
            raise ValueError("count must be nonnegative")
        if count == 0:
            return {}
        flow = np.zeros(len(self.indices), dtype=np.int64)
        self._serve_into(v, count, flow)
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return {int(self.indices[e]): int(flow[e]) for e in range(lo, hi) if flow[e]}

    def route(self, chi):
        """Serve every vertex's tokens for one synchronous step.

        Returns ``(flow, chi_next)`` where ``flow`` is aligned with
        ``(owner, indices)``.
        """
        chi = np.asarray(chi, dtype=np.int64)
        flow = np.zeros(len(self.indices), dtype=np.int64)
        if np.any(self.served + chi > COUNTER_CAP):
            raise CounterOverflow(f"serve counters would exceed {COUNTER_CAP}")
        if self.trace is not None:
            for v in np.flatnonzero(chi):
                self._serve_into(int(v), int(chi[v]), flow)
            chi_next = np.bincount(self.indices, weights=flow, minlength=self.n).astype(np.int64)
            return flow, chi_next
        chi_next = np.zeros(self.n, dtype=np.int64)
        bad = _route(chi, self.indptr, self.indices, self.probs, self.counts, self.served,
                     flow, chi_next)
        if bad >= 0:
            raise EmptyCandidateSet(int(bad), int(self.served[bad]))
        return flow, chi_next

    def discrepancies(self) -> np.ndarray:
        """``c[v,u] - X_v P[v,u]`` for every support pair, in CSR order."""
        return self.counts - self.served[self.owner] * self.probs

    def audit(self, v: int = None) -> float:
        """Worst |c[v,u] - X_v P[v,u]| at ``v``, or over all vertices."""
        d = np.abs(self.discrepancies())
        if v is not None:
            d = d[self.indptr[v]:self.indptr[v + 1]]
        return float(d.max()) if len(d) else 0.0


def srt_sequence(probs, length: int, order=None) -> np.ndarray:
    """First ``length`` emissions of the router for one probability row.

    ``probs`` lists the positive probabilities of the neighbours
    ``0 .. d-1``; ``order`` optionally permutes the tie-breaking order.
    The result holds neighbour positions, not vertex ids.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if np.any(probs <= 0):
        raise ValueError("router rows need strictly positive entries")
    order = np.arange(len(probs)) if order is None else np.asarray(order, dtype=np.int64)
    indptr = np.array([0, len(probs)], dtype=np.int64)
    counts = np.zeros(len(probs), dtype=np.int64)
    served = np.zeros(1, dtype=np.int64)
    flow = np.zeros(len(probs), dtype=np.int64)
    record = np.zeros(length, dtype=np.int64)
    done = _emit(0, length, indptr, probs[order], counts, served, flow, record)
    if done < length:
        raise EmptyCandidateSet(0, done)
    return order[record]
