"""Finite Markov chains: validation, stationary distributions and mixing.

All functions are pure; a validated :class:`TransitionMatrix` is immutable
and may be shared freely between callers.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np

ROW_SUM_TOL = 1e-12
DIST_SUM_TOL = 1e-10
STATIONARY_RESIDUAL_TOL = 1e-10
REVERSIBLE_TOL = 1e-10
MONOTONE_TOL = 1e-12
SUBNORMAL_CUTOFF = 1e-15
DENSE_SOLVE_MAX_N = 4096
POWER_ITER_TOL = 1e-12
POWER_ITER_CAP = 10**6


class ChainError(ValueError):
    """Base class for malformed or unsuitable chains."""


class NotStochastic(ChainError):
    def __init__(self, row, deviation):
        super().__init__(f"row {row} sums to 1{deviation:+.3e}")
        self.row = row
        self.deviation = deviation


class NegativeEntry(ChainError):
    def __init__(self, row, col, value):
        super().__init__(f"negative entry P[{row},{col}] = {value!r}")
        self.row = row
        self.col = col


class NotIrreducible(ChainError):
    pass


class NotErgodic(ChainError):
    pass


class DimensionMismatch(ChainError):
    pass


class SolverFailure(RuntimeError):
    def __init__(self, residual):
        super().__init__(f"stationary solve residual {residual:.3e} too large")
        self.residual = residual


class HorizonExceeded(RuntimeError):
    """Some requested mixing threshold was not reached by ``t_max``.

    The partial profile is attached as ``profile``.
    """

    def __init__(self, profile):
        missing = ", ".join(repr(e) for e in profile.unreached)
        super().__init__(f"tau not reached by t={profile.t_max} for eps in {{{missing}}}")
        self.profile = profile


class SubnormalEntry(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic matrix together with its support lists.

    ``support[v]`` is N(v) = {u : P[v,u] > 0} in ascending order and
    ``degree[v] = |N(v)|`` is the support degree (self-loops included).
    """

    rows: np.ndarray
    support: tuple
    degree: np.ndarray

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def __getitem__(self, idx):
        return self.rows[idx]

    def to_csr(self):
        """Return ``(indptr, indices, probs)`` for the support, row by row."""
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum(self.degree)
        indices = np.concatenate([np.asarray(s, dtype=np.int64) for s in self.support])
        return indptr, indices, self.rows[self.rows > 0].astype(np.float64)


def validate(raw) -> TransitionMatrix:
    """Check a square matrix for stochasticity and build its support."""
    P = np.array(raw, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise ChainError("matrix contains non-finite entries")
    neg = np.argwhere(P < 0)
    if len(neg):
        r, c = neg[0]
        raise NegativeEntry(int(r), int(c), float(P[r, c]))
    dev = P.sum(axis=1) - 1.0
    bad = np.flatnonzero(np.abs(dev) > ROW_SUM_TOL)
    if len(bad):
        raise NotStochastic(int(bad[0]), float(dev[bad[0]]))
    tiny = (P > 0) & (P < SUBNORMAL_CUTOFF)
    if tiny.any():
        r, c = np.argwhere(tiny)[0]
        warnings.warn(f"entry P[{r},{c}] = {P[r, c]!r} below {SUBNORMAL_CUTOFF}", SubnormalEntry)
    support = tuple(tuple(int(u) for u in np.flatnonzero(row > 0)) for row in P)
    degree = np.array([len(s) for s in support], dtype=np.int64)
    P.setflags(write=False)
    degree.setflags(write=False)
    return TransitionMatrix(P, support, degree)


def _as_matrix(P) -> TransitionMatrix:
    return P if isinstance(P, TransitionMatrix) else validate(P)


def _reach(adj, start):
    seen = {start}
    dq = deque([start])
    while dq:
        v = dq.popleft()
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                dq.append(u)
    return seen


def check_irreducible(P) -> bool:
    """True iff the support digraph is strongly connected."""
    P = _as_matrix(P)
    n = P.n
    if len(_reach(P.support, 0)) != n:
        return False
    reverse = [[] for _ in range(n)]
    for v, nbrs in enumerate(P.support):
        for u in nbrs:
            reverse[u].append(v)
    return len(_reach(reverse, 0)) == n


def period(P) -> int:
    """Period of an irreducible chain via BFS levels.

    The period is the gcd over support edges (u -> v) of
    ``level(u) + 1 - level(v)``.
    """
    P = _as_matrix(P)
    if not check_irreducible(P):
        raise NotIrreducible("period is only defined for irreducible chains")
    level = [-1] * P.n
    level[0] = 0
    dq = deque([0])
    while dq:
        v = dq.popleft()
        for u in P.support[v]:
            if level[u] < 0:
                level[u] = level[v] + 1
                dq.append(u)
    g = 0
    for v, nbrs in enumerate(P.support):
        for u in nbrs:
            g = math.gcd(g, abs(level[v] + 1 - level[u]))
    # a single state with a self-loop gives g = 1; n = 1 always has one
    return g


def check_aperiodic(P) -> bool:
    return period(P) == 1


def check_ergodic(P) -> bool:
    P = _as_matrix(P)
    return check_irreducible(P) and check_aperiodic(P)


def stationary_distribution(P) -> np.ndarray:
    """Unique stationary distribution of an ergodic chain.

    Dense linear solve up to ``DENSE_SOLVE_MAX_N`` states, power iteration
    beyond that.
    """
    P = _as_matrix(P)
    if not check_irreducible(P):
        raise NotErgodic("chain is not irreducible")
    if not check_aperiodic(P):
        raise NotErgodic("chain is periodic")
    n = P.n
    if n <= DENSE_SOLVE_MAX_N:
        A = P.rows.T - np.eye(n)
        A[-1, :] = 1.0
        b = np.zeros(n)
        b[-1] = 1.0
        pi = np.linalg.solve(A, b)
    else:
        pi = np.full(n, 1.0 / n)
        for _ in range(POWER_ITER_CAP):
            nxt = pi @ P.rows
            if np.abs(nxt - pi).sum() <= POWER_ITER_TOL:
                pi = nxt
                break
            pi = nxt
    pi = pi / pi.sum()
    residual = float(np.abs(pi @ P.rows - pi).sum())
    if residual > STATIONARY_RESIDUAL_TOL or not np.all(pi > 0):
        raise SolverFailure(residual)
    return pi


def evolve(xi, P, t: int) -> np.ndarray:
    """Return ``xi P^t`` by ``t`` vector-matrix products."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    rows = _as_matrix(P).rows
    x = np.array(xi, dtype=np.float64)
    for _ in range(t):
        x = x @ rows
    return x


def tv_distance(xi, zeta) -> float:
    xi = np.asarray(xi, dtype=np.float64)
    zeta = np.asarray(zeta, dtype=np.float64)
    if xi.shape != zeta.shape:
        raise DimensionMismatch(f"{xi.shape} vs {zeta.shape}")
    return 0.5 * float(np.abs(xi - zeta).sum())


def check_reversible(P, pi, tol: float = REVERSIBLE_TOL) -> bool:
    """Detailed balance audit: max |pi_u P_uv - pi_v P_vu| <= tol."""
    rows = _as_matrix(P).rows
    flow = np.asarray(pi, dtype=np.float64)[:, None] * rows
    return float(np.abs(flow - flow.T).max()) <= tol


def _pairwise_tv_max(Pt, chunk=64):
    n = Pt.shape[0]
    best = 0.0
    for lo in range(0, n, chunk):
        block = np.abs(Pt[lo:lo + chunk, None, :] - Pt[None, :, :]).sum(axis=2)
        best = max(best, 0.5 * float(block.max()))
    return best


@dataclass
class MixingProfile:
    """Per-step mixing diagnostics for ``t = 0 .. t_max`` (as far as computed).

    ``tv_curve[t]`` is the worst-start TV distance to stationarity,
    ``d_bar_curve[t]`` the worst pairwise TV distance between rows of P^t and
    ``separation_curve[t]`` the separation distance s(t).
    """

    tv_curve: np.ndarray
    d_bar_curve: np.ndarray
    separation_curve: np.ndarray
    tau: dict
    t_max: int
    unreached: list = field(default_factory=list)

    @property
    def horizon_exceeded(self) -> bool:
        return bool(self.unreached)

    @property
    def t_star(self):
        return self.tau.get(0.25)

    @property
    def t_end(self) -> int:
        return len(self.tv_curve) - 1


def mixing_profile(P, pi, t_max: int, eps_list=(0.25,), *, mode: str = "matrix",
                   run_to=None, strict: bool = False) -> MixingProfile:
    """Compute TV, d-bar and separation curves and τ(ε) for each ε.

    Iteration stops once every requested threshold is crossed (and ``run_to``
    steps have been computed, if given) or at ``t_max``. ε = 1/4 is always
    included so that ``t_star`` is available. With ``strict`` an unreached
    threshold raises :class:`HorizonExceeded`; otherwise the partial profile
    carries the unreached values in ``unreached``.

    ``mode="rows"`` advances each start row with its own vector-matrix
    product, trading speed for memory locality on larger chains.
    """
    P = _as_matrix(P)
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    if mode not in ("matrix", "rows"):
        raise ValueError(f"unknown mode {mode!r}")
    pi = np.asarray(pi, dtype=np.float64)
    eps_all = sorted({float(e) for e in eps_list} | {0.25}, reverse=True)
    if any(e <= 0 for e in eps_all):
        raise ValueError("eps must be positive")
    stop_at = 0 if run_to is None else min(int(run_to), t_max)

    n = P.n
    Pt = np.eye(n)
    tv, dbar, sep = [], [], []
    tau = {}
    pending = list(eps_all)
    t = 0
    while True:
        d = 0.5 * np.abs(Pt - pi).sum(axis=1).max()
        tv.append(float(d))
        dbar.append(_pairwise_tv_max(Pt))
        sep.append(float((1.0 - Pt / pi).max()))
        while pending and d <= pending[0]:
            tau[pending.pop(0)] = t
        if (not pending and t >= stop_at) or t >= t_max:
            break
        if mode == "matrix":
            Pt = Pt @ P.rows
        else:
            Pt = np.vstack([row @ P.rows for row in Pt])
        t += 1

    profile = MixingProfile(np.array(tv), np.array(dbar), np.array(sep), tau,
                            t_max, unreached=pending)
    if pending and strict:
        raise HorizonExceeded(profile)
    return profile


def matrix_power(P, t: int) -> np.ndarray:
    return np.linalg.matrix_power(_as_matrix(P).rows, t)
