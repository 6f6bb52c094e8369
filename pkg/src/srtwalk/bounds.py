"""Closed-form evaluators for the visit-frequency and cover-time bounds.

These are plain arithmetic on chain summaries so that simulated quantities
can be compared against theory mechanically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import markov
from .markov import TransitionMatrix, validate

BOUND_SLACK = 1e-6
FLOOR_SLACK = 1e-9


class BadGamma(ValueError):
    pass


class PreconditionViolated(ValueError):
    pass


@dataclass
class ChainSummary:
    """Everything the bounds consume about one chain and token count."""

    t_star: int
    pi: np.ndarray
    m_prime: float
    degree: np.ndarray
    n: int
    k: int = 1
    m: int | None = None
    profile: markov.MixingProfile | None = None

    @property
    def max_degree(self) -> int:
        return int(self.degree.max())

    @property
    def pi_min(self) -> float:
        return float(self.pi.min())


def summarize(P, t_max: int, k: int = 1, *, pi=None, m=None, run_to=None) -> ChainSummary:
    """Stationary distribution, t* and m' for an ergodic chain.

    Raises :class:`~srtwalk.markov.HorizonExceeded` when t* is not reached
    within ``t_max``.
    """
    if not isinstance(P, TransitionMatrix):
        P = validate(P)
    if pi is None:
        pi = markov.stationary_distribution(P)
    profile = markov.mixing_profile(P, pi, t_max, (0.25,), run_to=run_to, strict=True)
    return ChainSummary(profile.t_star, pi, m_prime(P, pi), np.asarray(P.degree), P.n, k, m, profile)


def m_prime(P, pi) -> float:
    """max_u δ(u) / π_u with δ the support degree."""
    deg = (P.degree if isinstance(P, TransitionMatrix) else validate(P).degree).astype(np.float64)
    return float(np.max(deg / np.asarray(pi, dtype=np.float64)))


def visit_bound(pi_w, t_star, m_prime):
    """Worst-case |X_w - M_w|: 3 π_w t* m'."""
    return 3.0 * np.asarray(pi_w, dtype=np.float64) * t_star * m_prime


def frequency_bound(t_star, T, pi_w, m_prime, k):
    """Bound on |π_w - X_w/(kT)|: 3t*/(2T) + 3 π_w t* m' / (kT)."""
    if np.any(np.asarray(T) < 1) or k < 1:
        raise ValueError("frequency bound needs T >= 1 and k >= 1")
    pi_w = np.asarray(pi_w, dtype=np.float64)
    return 3.0 * t_star / (2.0 * T) + 3.0 * pi_w * t_star * m_prime / (k * T)


def frequency_constant(t_star, pi_w, m_prime, k):
    """The T-independent K with frequency_bound = K π_w / T."""
    pi_w = np.asarray(pi_w, dtype=np.float64)
    return 3.0 * t_star / (2.0 * pi_w) + 3.0 * t_star * m_prime / k


def frequency_threshold(t_star, pi_w, m_prime, k, eps):
    """Smallest real T at which frequency_bound drops to ``eps``."""
    return 3.0 * (0.5 + pi_w * m_prime / k) * t_star / eps


def frequency_threshold_degree(t_star, pi_w, max_degree, pi_min, k, eps):
    """Degree variant of the threshold: 3 (1/2 + π_w Δ / (π_min k)) t* / ε.

    Uses Δ / π_min in place of m'; since m' <= Δ / π_min this is never
    smaller than :func:`frequency_threshold`.
    """
    return 3.0 * (0.5 + pi_w * max_degree / (pi_min * k)) * t_star / eps


def expected_visits_bound(t_star, k):
    """Bound on |M_w - k T π_w| for the expected process: 3 k t* / 2."""
    return 1.5 * k * t_star


def cover_bound(t_star, m_prime, k):
    """2t* + 1 + 12 m' t* / k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 2.0 * t_star + 1.0 + 12.0 * m_prime * t_star / k


def rotor_cover_bound(t_star, m, k):
    """2t* + 1 + 24 m t* / k for the simple random walk on a graph with m edges."""
    if k < 1 or m < 1:
        raise ValueError("k and m must be >= 1")
    return 2.0 * t_star + 1.0 + 24.0 * m * t_star / k


def tv_sum_bound(tau_gamma, gamma):
    """Bound on Σ_{t<T} D_tv(P^t_v, π): (1-γ)/(1-2γ) · τ(γ), for 0 < γ < 1/2."""
    if not (0 < gamma < 0.5):
        raise BadGamma(f"gamma must lie in (0, 1/2), got {gamma}")
    return (1.0 - gamma) / (1.0 - 2.0 * gamma) * tau_gamma


def separation_ratio(P, pi, t) -> float:
    """min_{u,w} P^t_{u,w} / π_w."""
    Pt = markov.matrix_power(P, t)
    return float((Pt / np.asarray(pi, dtype=np.float64)[None, :]).min())


def separation_floor_check(P, pi, t_star, t, slack=FLOOR_SLACK) -> bool:
    """Whether P^t_{u,w} >= π_w / 4 for all u, w, valid once t >= 2t*."""
    if t < 2 * t_star:
        raise PreconditionViolated(f"t={t} < 2t*={2 * t_star}")
    return separation_ratio(P, pi, t) >= 0.25 - slack
