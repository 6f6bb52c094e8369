"""Graphs, graph generators and the transition matrices built from them."""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .markov import ChainError, TransitionMatrix, validate

ER_RETRIES = 100
GENERATOR_KINDS = ("path", "cycle", "complete", "star", "grid", "er")
CHAIN_KINDS = ("simple", "lazy", "metropolis", "beta")


class ParseError(ValueError):
    def __init__(self, message, line=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


class SelfLoopRejected(ValueError):
    def __init__(self, vertex, line=None):
        super().__init__(f"self-loop at vertex {vertex}" + (f" (line {line})" if line else ""))
        self.vertex = vertex
        self.line = line


class BadParams(ValueError):
    pass


class Disconnected(ValueError):
    pass


class NotConnectedWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0 .. n-1``.

    ``labels[i]`` is the original identifier of vertex ``i`` when the graph
    was read from a file with non-contiguous ids.
    """

    n: int
    edges: frozenset
    labels: tuple = field(default=None, compare=False)

    @classmethod
    def from_edges(cls, n, edges, labels=None):
        canon = set()
        for u, v in edges:
            if u == v:
                raise SelfLoopRejected(u)
            if not (0 <= u < n and 0 <= v < n):
                raise BadParams(f"edge ({u}, {v}) out of range for n={n}")
            canon.add((min(u, v), max(u, v)))
        return cls(n, frozenset(canon), tuple(labels) if labels is not None else None)

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbors(self):
        adj = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return [sorted(a) for a in adj]

    @property
    def degree(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for u, v in self.edges:
            A[u, v] = A[v, u] = 1.0
        return A

    def _colouring(self):
        adj = self.neighbors()
        colour = [-1] * self.n
        components = 0
        bipartite = True
        for s in range(self.n):
            if colour[s] >= 0:
                continue
            components += 1
            colour[s] = 0
            stack = [s]
            while stack:
                v = stack.pop()
                for u in adj[v]:
                    if colour[u] < 0:
                        colour[u] = 1 - colour[v]
                        stack.append(u)
                    elif colour[u] == colour[v]:
                        bipartite = False
        return components, bipartite

    @property
    def connected(self) -> bool:
        return self._colouring()[0] == 1

    @property
    def bipartite(self) -> bool:
        return self._colouring()[1]


def load_graph(path) -> Graph:
    """Read a whitespace-separated edge list; '#' starts a comment line.

    Vertex ids may be arbitrary nonnegative integers and are compacted to
    ``0 .. n-1`` in ascending order; the original ids land in ``labels``.
    A disconnected result is returned with a :class:`NotConnectedWarning`.
    """
    raw = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ParseError(f"expected 'u v', got {text!r}", lineno)
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"non-integer vertex id in {text!r}", lineno) from None
            if u < 0 or v < 0:
                raise ParseError("vertex ids must be nonnegative", lineno)
            if u == v:
                raise SelfLoopRejected(u, lineno)
            raw.append((u, v))
    if not raw:
        raise ParseError("no edges found")
    labels = sorted({x for e in raw for x in e})
    index = {lab: i for i, lab in enumerate(labels)}
    g = Graph.from_edges(len(labels), [(index[u], index[v]) for u, v in raw], labels)
    if not g.connected:
        warnings.warn(f"graph {path} is not connected", NotConnectedWarning)
    return g


def save_graph(g: Graph, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={g.n} m={g.m}\n")
        for u, v in sorted(g.edges):
            fh.write(f"{u} {v}\n")


def generate(kind: str, n: int, *, p: float = None, seed: int = None, cols: int = None) -> Graph:
    """Deterministic graph generator.

    ``grid`` builds an ``n x cols`` lattice (square when ``cols`` is omitted);
    ``er`` draws G(n, p) with a seeded generator, retrying until connected.
    """
    if kind not in GENERATOR_KINDS:
        raise BadParams(f"unknown graph kind {kind!r}")
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise BadParams("n must be a positive integer")
    if kind == "path":
        if n < 2:
            raise BadParams("path needs n >= 2")
        return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])
    if kind == "cycle":
        if n < 3:
            raise BadParams("cycle needs n >= 3")
        return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])
    if kind == "complete":
        if n < 2:
            raise BadParams("complete graph needs n >= 2")
        return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])
    if kind == "star":
        if n < 2:
            raise BadParams("star needs n >= 2")
        return Graph.from_edges(n, [(0, i) for i in range(1, n)])
    if kind == "grid":
        rows, cols = n, n if cols is None else cols
        if cols < 1 or rows * cols < 2:
            raise BadParams("grid needs at least two cells")
        edges = []
        for r in range(rows):
            for c in range(cols):
                v = r * cols + c
                if c + 1 < cols:
                    edges.append((v, v + 1))
                if r + 1 < rows:
                    edges.append((v, v + cols))
        return Graph.from_edges(rows * cols, edges)
    # er
    if p is None or not (0 < p <= 1):
        raise BadParams("er requires p in (0, 1]")
    if seed is None:
        raise BadParams("er requires a seed")
    if n < 2:
        raise BadParams("er needs n >= 2")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    for _ in range(ER_RETRIES):
        keep = rng.random(len(iu)) < p
        g = Graph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))
        if g.connected:
            return g
    raise Disconnected(f"G({n}, {p}) not connected after {ER_RETRIES} draws (seed {seed})")


def _require_connected(g):
    if not g.connected:
        raise Disconnected("walk construction needs a connected graph")


def simple_rw(g: Graph) -> TransitionMatrix:
    _require_connected(g)
    A = g.adjacency()
    return validate(A / A.sum(axis=1, keepdims=True))


def lazy_rw(g: Graph, alpha: float = 0.5) -> TransitionMatrix:
    """Simple walk that holds with probability ``alpha``."""
    if not (0 < alpha < 1):
        raise BadParams("alpha must lie in (0, 1)")
    _require_connected(g)
    A = g.adjacency()
    P = (1 - alpha) * A / A.sum(axis=1, keepdims=True)
    np.fill_diagonal(P, alpha)
    return validate(P)


def metropolis(g: Graph) -> TransitionMatrix:
    """Metropolis walk targeting the uniform distribution.

    P[u,v] = min(1/deg u, 1/deg v) on edges, the remainder held at u.
    """
    _require_connected(g)
    deg = g.degree.astype(np.float64)
    P = np.zeros((g.n, g.n))
    for u, v in g.edges:
        P[u, v] = P[v, u] = min(1.0 / deg[u], 1.0 / deg[v])
    hold = 1.0 - P.sum(axis=1)
    # exact zeros for regular neighbourhoods, never a rounding-noise loop
    hold[hold < 1e-14] = 0.0
    P[np.diag_indices(g.n)] = hold
    return validate(P)


def beta_rw(g: Graph, beta: float = 0.5) -> TransitionMatrix:
    """Walk that prefers low-degree neighbours: P[u,v] ∝ deg(v)^-beta."""
    if not (0 <= beta <= 1):
        raise BadParams("beta must lie in [0, 1]")
    _require_connected(g)
    A = g.adjacency()
    W = A * g.degree.astype(np.float64)[None, :] ** (-beta)
    return validate(W / W.sum(axis=1, keepdims=True))


def claimed_stationary(kind: str, g: Graph, beta: float = 0.5) -> np.ndarray:
    """Closed-form stationary distribution each builder is designed to have."""
    deg = g.degree.astype(np.float64)
    if kind in ("simple", "lazy"):
        return deg / (2 * g.m)
    if kind == "metropolis":
        return np.full(g.n, 1.0 / g.n)
    if kind == "beta":
        w = deg ** (-beta)
        pi = w * (g.adjacency() @ w)
        return pi / pi.sum()
    raise BadParams(f"unknown chain kind {kind!r}")


def build_chain(kind: str, g: Graph, *, alpha: float = 0.5, beta: float = 0.5) -> TransitionMatrix:
    if kind == "simple":
        return simple_rw(g)
    if kind == "lazy":
        return lazy_rw(g, alpha)
    if kind == "metropolis":
        return metropolis(g)
    if kind == "beta":
        return beta_rw(g, beta)
    raise BadParams(f"unknown chain kind {kind!r}")


def save_matrix(P, path):
    """Write ``{"n": ..., "rows": ...}`` with 17 significant digits per entry."""
    rows = P.rows if isinstance(P, TransitionMatrix) else np.asarray(P, dtype=np.float64)
    body = ",\n  ".join("[" + ", ".join(format(float(x), ".17g") for x in r) + "]" for r in rows)
    Path(path).write_text(f'{{"n": {rows.shape[0]}, "rows": [\n  {body}\n]}}\n', encoding="utf-8")


def parse_matrix(text: str, fmt: str = None) -> TransitionMatrix:
    if fmt is None:
        fmt = "json" if text.lstrip().startswith("{") else "csv"
    if fmt == "json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, exc.lineno) from None
        if not isinstance(doc, dict) or "rows" not in doc:
            raise ParseError("matrix JSON needs a 'rows' field")
        rows = doc["rows"]
        if "n" in doc and doc["n"] != len(rows):
            raise ParseError(f"n={doc['n']} but {len(rows)} rows given")
    else:
        rows = []
        for lineno, rec in enumerate(csv.reader(io.StringIO(text)), 1):
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                rows.append([float(c) for c in rec])
            except ValueError:
                raise ParseError(f"non-numeric cell in {rec!r}", lineno) from None
    if any(len(r) != len(rows) for r in rows):
        raise ParseError("matrix is not square")
    try:
        return validate(rows)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ChainError):
            raise
        raise ParseError(str(exc)) from None


def load_matrix(path) -> TransitionMatrix:
    path = Path(path)
    fmt = {".json": "json", ".csv": "csv"}.get(path.suffix.lower())
    return parse_matrix(path.read_text(encoding="utf-8"), fmt)
