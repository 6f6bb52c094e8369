"""k-token SRT-router walk run in lockstep with its expected process.

The deterministic configuration χ, its visit counts X and the token flows Z
advance together with the expected configuration μ = μ0 P^t and its running
sum M.  Everything the visit-frequency and cover-time statements consume is
kept here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import markov
from .markov import TransitionMatrix, validate
from .router import COUNTER_CAP, RouterState


class NoTokens(ValueError):
    pass


class HorizonOverflow(OverflowError):
    pass


class HistoryNotRetained(RuntimeError):
    pass


@dataclass
class StepFlow:
    """Tokens moved at one step: ``counts[e]`` tokens from ``sources[e]`` to ``targets[e]``."""

    t: int
    sources: np.ndarray
    targets: np.ndarray
    counts: np.ndarray
    n: int

    def dense(self) -> np.ndarray:
        Z = np.zeros((self.n, self.n), dtype=np.int64)
        np.add.at(Z, (self.sources, self.targets), self.counts)
        return Z

    def out_totals(self) -> np.ndarray:
        return np.bincount(self.sources, weights=self.counts, minlength=self.n).astype(np.int64)

    def in_totals(self) -> np.ndarray:
        return np.bincount(self.targets, weights=self.counts, minlength=self.n).astype(np.int64)


@dataclass
class CoverTimeReport:
    covered: bool
    t_cover: int | None
    horizon: int
    first_visit: np.ndarray
    k: int
    t_star: int | None = None
    bound: float | None = None
    bound_satisfied: bool | None = None
    skipped_reason: str | None = None

    @property
    def ratio(self):
        if self.t_cover is None or not self.bound:
            return None
        return self.t_cover / self.bound

    def to_dict(self):
        return {
            "covered": self.covered,
            "t_cover": self.t_cover,
            "horizon": self.horizon,
            "k": self.k,
            "t_star": self.t_star,
            "bound": self.bound,
            "bound_satisfied": self.bound_satisfied,
            "ratio": self.ratio,
            "skipped_reason": self.skipped_reason,
            "first_visit": [int(x) for x in self.first_visit],
        }


@dataclass
class Hypotheses:
    irreducible: bool
    aperiodic: bool
    reversible: bool | None

    @property
    def ergodic(self):
        return self.irreducible and self.aperiodic

    @property
    def holds(self):
        return self.ergodic and bool(self.reversible)

    @property
    def reason(self):
        if not self.irreducible:
            return "chain is not irreducible"
        if not self.aperiodic:
            return "chain is periodic"
        if not self.reversible:
            return "chain is not reversible"
        return None


@dataclass
class WalkState:
    P: TransitionMatrix
    router: RouterState
    chi: np.ndarray
    mu: np.ndarray
    X: np.ndarray
    M: np.ndarray
    first_visit: np.ndarray
    k: int
    hypotheses: Hypotheses
    pi: np.ndarray | None
    t: int = 0
    pair_sum: np.ndarray = None
    retain_history: bool = False
    chi_history: list = field(default_factory=list)
    flow_history: list = field(default_factory=list)
    trace: object = None
    _powers: list = field(default_factory=list, repr=False)

    @property
    def n(self) -> int:
        return self.P.n

    @property
    def covered(self) -> bool:
        return bool(np.all(self.X >= 1))

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "k": self.k,
            "chi": self.chi.tolist(),
            "X": self.X.tolist(),
            "M": self.M.tolist(),
            "first_visit": self.first_visit.tolist(),
            "hypotheses": {
                "irreducible": self.hypotheses.irreducible,
                "aperiodic": self.hypotheses.aperiodic,
                "reversible": self.hypotheses.reversible,
            },
        }

    def dump_json(self, path, extra=None):
        doc = self.to_dict()
        if extra:
            doc.update(extra)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)


def init(P, mu0, *, tie_order: str = "asc", retain_history: bool = False,
         pi=None, trace=None, router_trace=None) -> WalkState:
    """Fresh walk with χ(0) = μ(0) = ``mu0`` and empty visit sums.

    ``trace`` is an optional text stream receiving ``t,v,chi,X,mu,M`` rows;
    ``router_trace`` receives the router's ``v i u`` emission lines.
    """
    if not isinstance(P, TransitionMatrix):
        P = validate(P)
    mu0 = np.asarray(mu0)
    if mu0.shape != (P.n,):
        raise ValueError(f"placement has shape {mu0.shape}, expected ({P.n},)")
    if not np.all(np.equal(np.mod(mu0, 1), 0)):
        raise ValueError("token placement must be integral")
    mu0 = mu0.astype(np.int64)
    if np.any(mu0 < 0):
        raise ValueError("token placement has a negative entry")
    k = int(mu0.sum())
    if k < 1:
        raise NoTokens("at least one token is required")

    irreducible = markov.check_irreducible(P)
    aperiodic = irreducible and markov.check_aperiodic(P)
    reversible = None
    if irreducible and aperiodic:
        if pi is None:
            pi = markov.stationary_distribution(P)
        reversible = markov.check_reversible(P, pi)
    router = RouterState(P, tie_order=tie_order, trace=router_trace)
    W = WalkState(
        P=P, router=router, chi=mu0.copy(), mu=mu0.astype(np.float64),
        X=np.zeros(P.n, dtype=np.int64), M=np.zeros(P.n), first_visit=np.full(P.n, -1, dtype=np.int64),
        k=k, hypotheses=Hypotheses(irreducible, aperiodic, reversible),
        pi=None if pi is None else np.asarray(pi, dtype=np.float64),
        pair_sum=np.zeros(len(router.indices)), retain_history=retain_history, trace=trace,
    )
    if trace is not None:
        trace.write("t,v,chi,X,mu,M\n")
    if retain_history:
        W.chi_history.append(W.chi.copy())
    return W


def _write_trace(W):
    for v in range(W.n):
        W.trace.write(f"{W.t},{v},{W.chi[v]},{W.X[v]},{float(W.mu[v])!r},{float(W.M[v])!r}\n")


def step(W: WalkState) -> StepFlow:
    """Advance one synchronous step and return its flow Z(t)."""
    if W.trace is not None:
        _write_trace(W)
    chi = W.chi
    W.X += chi
    W.M += W.mu
    newly = (W.first_visit < 0) & (chi > 0)
    W.first_visit[newly] = W.t
    flow, chi_next = W.router.route(chi)
    r = W.router
    W.pair_sum += flow - chi[r.owner] * r.probs
    nz = np.flatnonzero(flow)
    out = StepFlow(W.t, r.owner[nz], r.indices[nz], flow[nz], W.n)
    W.chi = chi_next
    W.mu = W.mu @ W.P.rows
    W.t += 1
    if W.retain_history:
        W.flow_history.append(out)
        W.chi_history.append(W.chi.copy())
    return out


def run(W: WalkState, T: int, *, on_step=None) -> WalkState:
    """Advance exactly ``T`` steps; ``on_step(W)`` runs after each one."""
    if T < 0:
        raise ValueError("T must be nonnegative")
    if W.k * (W.t + T) > COUNTER_CAP:
        raise HorizonOverflow(f"k*T = {W.k * (W.t + T)} exceeds {COUNTER_CAP}")
    for _ in range(T):
        step(W)
        if on_step is not None:
            on_step(W)
    if W.trace is not None and T:
        _write_trace(W)
    return W


def cover_time(W: WalkState, T_max: int, summary=None) -> CoverTimeReport:
    """Step until every vertex has X_v >= 1 or ``T_max`` is reached.

    With a :class:`~srtwalk.bounds.ChainSummary` the measured value is
    compared against the general cover-time bound for this walk's k.
    """
    from . import bounds

    if T_max < 1:
        raise ValueError("T_max must be >= 1")
    if W.k * max(T_max, W.t) > COUNTER_CAP:
        raise HorizonOverflow(f"k*T_max exceeds {COUNTER_CAP}")
    while not W.covered and W.t < T_max:
        step(W)
    covered = W.covered
    t_cover = int(W.first_visit.max()) + 1 if covered else None
    report = CoverTimeReport(covered, t_cover, T_max, W.first_visit.copy(), W.k)
    if summary is None:
        report.skipped_reason = "no chain summary supplied"
    elif not W.hypotheses.holds:
        report.skipped_reason = W.hypotheses.reason
    else:
        report.t_star = summary.t_star
        report.bound = bounds.cover_bound(summary.t_star, summary.m_prime, W.k)
        report.bound_satisfied = covered and t_cover <= report.bound
    return report


def visit_discrepancy(W: WalkState):
    """``(|X_w - M_w| per vertex, max over w)`` at the current T."""
    d = np.abs(W.X - W.M)
    return d, float(d.max())


def frequency_error(W: WalkState) -> np.ndarray:
    """``|π_w - X_w / (k T)|`` per vertex."""
    if W.t < 1:
        raise ValueError("frequency error needs T >= 1")
    if W.pi is None:
        raise markov.NotErgodic("stationary distribution unavailable for this chain")
    return np.abs(W.pi - W.X / (W.k * W.t))


def pair_discrepancy(W: WalkState) -> np.ndarray:
    """Accumulated Σ_t (Z_vu(t) - χ_v(t) P_vu) per support pair, CSR order."""
    return W.pair_sum.copy()


def _power(W, s):
    while len(W._powers) <= s:
        if not W._powers:
            W._powers.append(np.eye(W.n))
        else:
            W._powers.append(W._powers[-1] @ W.P.rows)
    return W._powers[s]


def _phi(W):
    # φ_u(t) = Σ_v (Z_vu(t) - χ_v(t) P_vu), one row per step t < T
    rows = W.P.rows
    out = np.empty((W.t, W.n))
    for t in range(W.t):
        Z = W.flow_history[t].dense()
        chi = W.chi_history[t]
        out[t] = (Z - chi[:, None] * rows).sum(axis=0)
    return out


def identity_residual(W: WalkState, form: str = "configuration") -> float:
    """Residual of the exact discrepancy identities at the current T.

    ``form="configuration"``: χ_w(T) - μ_w(T) against
    Σ_{t<T} Σ_u φ_u(t) (P^{T-t-1}_{u,w} - π_w).

    ``form="visits"``: X_w(T) - M_w(T) against
    Σ_{t=0}^{T-2} Σ_u Σ_{t'=0}^{T-t-2} φ_u(t') (P^t_{u,w} - π_w).

    Both right-hand sides are evaluated from the retained flow history and
    explicit matrix powers, independently of the μ recursion.
    """
    if not W.retain_history:
        raise HistoryNotRetained("init the walk with retain_history=True")
    T = W.t
    pi = W.pi if W.pi is not None else np.zeros(W.n)
    phi = _phi(W)
    if form == "configuration":
        lhs = W.chi - W.mu
        rhs = np.zeros(W.n)
        for t in range(T):
            rhs += phi[t] @ (_power(W, T - t - 1) - pi[None, :])
    elif form == "visits":
        lhs = W.X - W.M
        rhs = np.zeros(W.n)
        cum = np.cumsum(phi, axis=0)
        for t in range(T - 1):
            rhs += cum[T - t - 2] @ (_power(W, t) - pi[None, :])
    else:
        raise ValueError(f"unknown identity form {form!r}")
    return float(np.abs(lhs - rhs).max())
