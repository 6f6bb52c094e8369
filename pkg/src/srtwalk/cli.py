"""Command-line harness: analyze | simulate | cover | sweep.

Exit codes: 0 success, 1 usage, 2 chain precondition failure, 3 bound
violation, 4 horizon exhausted.  Tables go to CSV, summaries to JSON; run
metadata (timestamps) lives only in ``metadata.json`` so that CSV bodies are
byte-identical between reruns.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bounds, chains, markov, walk

EXIT_OK, EXIT_USAGE, EXIT_CHAIN, EXIT_BOUND, EXIT_HORIZON = 0, 1, 2, 3, 4
DEFAULT_MIX_TMAX = 10_000


class UsageError(Exception):
    pass


class ChainPrecondition(Exception):
    pass


@dataclass
class ExperimentConfig:
    graph: str = None
    gen: str = None
    n: int = None
    p: float = None
    seed: int = None
    cols: int = None
    matrix: str = None
    chain: str = "simple"
    alpha: float = 0.5
    beta: float = 0.5
    k: int = None
    place: str = "single:0"
    steps: int = None
    tmax: int = None
    mix_tmax: int = DEFAULT_MIX_TMAX
    eps_list: str = "0.25"
    out: str = None
    audit_identity: bool = False
    dump_flows: bool = False
    trace: bool = False
    trace_router: bool = False
    tie_order: str = "asc"
    axis: str = None
    values: str = None
    jobs: int = 1
    figures: bool = False

    @classmethod
    def merge(cls, file_cfg: dict, flags: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(file_cfg) - names
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**file_cfg)
        for key, val in flags.items():
            if key in names and val is not None:
                setattr(cfg, key, val)
        return cfg


# ---------------------------------------------------------------- chain setup

@dataclass
class Chain:
    P: markov.TransitionMatrix
    graph: chains.Graph = None
    label: str = ""

    @property
    def m(self):
        if self.graph is not None:
            return self.graph.m
        off = (self.P.rows > 0) & ~np.eye(self.P.n, dtype=bool)
        return int((off | off.T).sum() // 2)


def resolve_chain(cfg: ExperimentConfig) -> Chain:
    sources = [x is not None for x in (cfg.graph, cfg.gen, cfg.matrix)]
    if sum(sources) != 1:
        raise UsageError("give exactly one of --graph, --gen, --matrix")
    try:
        if cfg.matrix is not None:
            return Chain(chains.load_matrix(cfg.matrix), None, f"matrix {cfg.matrix}")
        if cfg.graph is not None:
            g = chains.load_graph(cfg.graph)
            label = f"{cfg.chain} walk on {cfg.graph}"
        else:
            if cfg.n is None:
                raise UsageError("--gen needs --n")
            g = chains.generate(cfg.gen, cfg.n, p=cfg.p, seed=cfg.seed, cols=cfg.cols)
            label = f"{cfg.chain} walk on {cfg.gen}({cfg.n})"
        if cfg.chain not in chains.CHAIN_KINDS:
            raise UsageError(f"--chain must be one of {chains.CHAIN_KINDS}")
        P = chains.build_chain(cfg.chain, g, alpha=cfg.alpha, beta=cfg.beta)
        return Chain(P, g, label)
    except (chains.ParseError, chains.SelfLoopRejected, chains.BadParams, OSError) as exc:
        raise UsageError(str(exc)) from None
    except (markov.ChainError, chains.Disconnected) as exc:
        raise ChainPrecondition(str(exc)) from None


def require_ergodic(chain: Chain, cfg: ExperimentConfig):
    if not markov.check_irreducible(chain.P):
        raise ChainPrecondition("irreducibility failed: support digraph is not strongly connected")
    if not markov.check_aperiodic(chain.P):
        hint = ""
        if chain.graph is not None and cfg.chain == "simple":
            hint = " (graph is bipartite; try --chain lazy)"
        raise ChainPrecondition(f"aperiodicity failed: chain has period {markov.period(chain.P)}{hint}")


def placement(cfg: ExperimentConfig, n: int) -> np.ndarray:
    rule = cfg.place or "single:0"
    if rule == "uniform":
        k = n if cfg.k is None else cfg.k
        mu0 = np.full(n, k // n, dtype=np.int64)
        mu0[: k % n] += 1
        return mu0
    kind, _, arg = rule.partition(":")
    if kind == "single":
        try:
            v = int(arg)
        except ValueError:
            raise UsageError(f"bad placement {rule!r}") from None
        if not 0 <= v < n:
            raise UsageError(f"placement vertex {v} out of range")
        mu0 = np.zeros(n, dtype=np.int64)
        mu0[v] = 1 if cfg.k is None else cfg.k
        return mu0
    if kind in ("file", "custom"):
        text = Path(arg).read_text() if kind == "file" else arg
        try:
            vals = [int(x) for x in text.replace(",", " ").split()]
        except ValueError:
            raise UsageError(f"bad placement list in {rule!r}") from None
        if len(vals) != n:
            raise UsageError(f"placement has {len(vals)} entries, chain has {n} states")
        mu0 = np.array(vals, dtype=np.int64)
        if cfg.k is not None and mu0.sum() != cfg.k:
            raise UsageError(f"placement sums to {mu0.sum()}, --k is {cfg.k}")
        return mu0
    raise UsageError(f"unknown placement rule {rule!r}")


def check_tokens(mu0):
    if np.any(mu0 < 0):
        raise UsageError("placement has negative entries")
    if mu0.sum() < 1:
        raise UsageError("need k >= 1 tokens")


def summarize_chain(chain: Chain, cfg: ExperimentConfig, k=1, run_to=None):
    try:
        return bounds.summarize(chain.P, cfg.mix_tmax, k, m=chain.m, run_to=run_to)
    except markov.HorizonExceeded as exc:
        raise HorizonError(f"t* not reached within --mix-tmax {cfg.mix_tmax}") from exc


class HorizonError(Exception):
    pass


# ---------------------------------------------------------------- output

def fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    if x is None:
        return ""
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(r.get(h)) for h in header])
    return buf.getvalue()


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


class Output:
    def __init__(self, cfg: ExperimentConfig, command: str, stdout):
        self.dir = Path(cfg.out) if cfg.out else None
        self.cfg = cfg
        self.command = command
        self.stdout = stdout
        self.written = []
        self.meta = {}
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def note_chain(self, chain):
        """Record the edge-list label of each compacted vertex id."""
        if chain.graph is not None and chain.graph.labels is not None:
            self.meta["vertex_labels"] = list(chain.graph.labels)

    def path(self, name):
        return None if self.dir is None else self.dir / name

    def write_text(self, name, text):
        if self.dir is not None:
            (self.dir / name).write_text(text, encoding="utf-8")
            self.written.append(name)

    def write_json(self, name, doc):
        self.write_text(name, json.dumps(jsonable(doc), indent=2) + "\n")

    def finish(self, summary, exit_code):
        self.write_json(f"{self.command}.json", summary)
        meta = {
            "command": self.command,
            "config": dataclasses.asdict(self.cfg),
            "exit_code": exit_code,
            "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "files": self.written + [f"{self.command}.json"],
            **self.meta,
        }
        self.write_json("metadata.json", meta)
        self.stdout.write(json.dumps(jsonable(summary), indent=2) + "\n")
        return exit_code


def _figure(out: Output, fn, name, *args, **kwargs):
    if not out.cfg.figures:
        return
    if out.dir is None:
        raise UsageError("--figures needs --out")
    from . import plotting

    getattr(plotting, fn)(*args, out.dir / name, **kwargs)
    out.written.append(name)


# ---------------------------------------------------------------- commands

def cmd_analyze(cfg: ExperimentConfig, stdout=sys.stdout) -> int:
    chain = resolve_chain(cfg)
    out = Output(cfg, "analyze", stdout)
    out.note_chain(chain)
    P = chain.P
    irreducible = markov.check_irreducible(P)
    aperiodic = irreducible and markov.check_aperiodic(P)
    report = {"n": P.n, "m": chain.m, "irreducible": irreducible, "aperiodic": aperiodic}
    if not (irreducible and aperiodic):
        try:
            require_ergodic(chain, cfg)
        except ChainPrecondition as exc:
            report["error"] = str(exc)
        out.finish(report, EXIT_CHAIN)
        print(report["error"], file=sys.stderr)
        return EXIT_CHAIN
    try:
        eps = [float(e) for e in cfg.eps_list.split(",") if e.strip()]
    except ValueError:
        raise UsageError(f"bad --eps-list {cfg.eps_list!r}") from None
    pi = markov.stationary_distribution(P)
    prof = markov.mixing_profile(P, pi, cfg.mix_tmax, eps)
    t_star = prof.t_star
    if t_star is not None and prof.t_end < 2 * t_star + 3:
        prof = markov.mixing_profile(P, pi, cfg.mix_tmax, eps, run_to=2 * t_star + 3)
    report.update({
        "pi": pi,
        "t_star": t_star,
        "tau": {repr(e): prof.tau.get(e) for e in sorted(prof.tau, reverse=True)},
        "unreached_eps": prof.unreached,
        "reversible": markov.check_reversible(P, pi),
        "m_prime": bounds.m_prime(P, pi),
        "support_degree": P.degree,
        "tv_curve": prof.tv_curve,
        "d_bar_curve": prof.d_bar_curve,
        "separation_curve": prof.separation_curve,
    })
    out.write_text("mixing.csv", csv_text(
        ["t", "tv", "d_bar", "separation"],
        [{"t": t, "tv": a, "d_bar": b, "separation": c}
         for t, (a, b, c) in enumerate(zip(prof.tv_curve, prof.d_bar_curve, prof.separation_curve))]))
    _figure(out, "plot_mixing", "mixing.png", prof, title=chain.label)
    code = EXIT_HORIZON if prof.unreached else EXIT_OK
    return out.finish(report, code)


def _bound_context(chain, cfg, W):
    """Chain summary when the theorems apply, else ``(None, reason)``."""
    if not W.hypotheses.holds:
        return None, W.hypotheses.reason
    return summarize_chain(chain, cfg, W.k), None


def cmd_simulate(cfg: ExperimentConfig, stdout=sys.stdout) -> int:
    if cfg.steps is None or cfg.steps < 1:
        raise UsageError("simulate needs --steps T with T >= 1")
    chain = resolve_chain(cfg)
    require_ergodic(chain, cfg)
    out = Output(cfg, "simulate", stdout)
    out.note_chain(chain)
    mu0 = placement(cfg, chain.P.n)
    check_tokens(mu0)
    trace = io.StringIO() if cfg.trace else None
    rtrace = io.StringIO() if cfg.trace_router else None
    W = walk.init(chain.P, mu0, tie_order=cfg.tie_order,
                  retain_history=cfg.audit_identity or cfg.dump_flows,
                  trace=trace, router_trace=rtrace)
    summary, skipped = _bound_context(chain, cfg, W)
    T = cfg.steps
    slack = bounds.BOUND_SLACK
    worst = {"visit_margin": math.inf, "pair_discrepancy": 0.0}
    vb = None
    if summary is not None:
        vb = bounds.visit_bound(W.pi, summary.t_star, summary.m_prime)
    violations = {"visit": 0, "pair": 0}

    def audit(W):
        pd = float(np.abs(W.pair_sum).max())
        worst["pair_discrepancy"] = max(worst["pair_discrepancy"], pd)
        if pd >= 1 + slack:
            violations["pair"] += 1
        if vb is not None:
            margin = float((vb - np.abs(W.X - W.M)).min())
            worst["visit_margin"] = min(worst["visit_margin"], margin)
            if margin < -slack:
                violations["visit"] += 1

    try:
        walk.run(W, T, on_step=audit)
    except walk.HorizonOverflow as exc:
        raise UsageError(str(exc)) from None

    diff, max_diff = walk.visit_discrepancy(W)
    ferr = walk.frequency_error(W)
    rows = []
    fb = None
    if summary is not None:
        fb = bounds.frequency_bound(summary.t_star, T, W.pi, summary.m_prime, W.k)
    for v in range(W.n):
        row = {"v": v, "pi": W.pi[v], "X": W.X[v], "M": W.M[v], "abs_diff": diff[v],
               "freq_error": ferr[v]}
        if summary is not None:
            row.update({"visit_bound": vb[v], "visit_margin": vb[v] - diff[v],
                        "freq_bound": fb[v], "freq_margin": fb[v] - ferr[v]})
        rows.append(row)
    header = ["v", "pi", "X", "M", "abs_diff", "visit_bound", "visit_margin",
              "freq_error", "freq_bound", "freq_margin"]
    out.write_text("simulate.csv", csv_text(header, rows))
    freq_violations = 0 if fb is None else int(np.sum(ferr > fb + 1e-9))
    report = {
        "chain": chain.label, "n": W.n, "k": W.k, "T": T, "tie_order": cfg.tie_order,
        "hypotheses": W.to_dict()["hypotheses"],
        "bounds_skipped": skipped,
        "t_star": None if summary is None else summary.t_star,
        "m_prime": None if summary is None else summary.m_prime,
        "max_abs_diff": max_diff,
        "worst_visit_margin": None if vb is None else worst["visit_margin"],
        "max_pair_discrepancy": worst["pair_discrepancy"],
        "max_freq_error": float(ferr.max()),
        "violations": {**violations, "frequency": freq_violations},
    }
    if cfg.audit_identity:
        report["identity_residual"] = {
            "configuration": walk.identity_residual(W, "configuration"),
            "visits": walk.identity_residual(W, "visits"),
        }
    if cfg.dump_flows:
        lines = ["t,v,u,z"] + [f"{f.t},{a},{b},{c}" for f in W.flow_history
                                for a, b, c in zip(f.sources, f.targets, f.counts)]
        out.write_text("flows.csv", "\n".join(lines) + "\n")
    if trace is not None:
        out.write_text("trace.csv", trace.getvalue())
    if rtrace is not None:
        out.write_text("router_trace.txt", rtrace.getvalue())
    if out.dir is not None:
        W.dump_json(out.dir / "final_state.json", {"chain": chain.label})
        out.written.append("final_state.json")
    _figure(out, "plot_visits", "visits.png", diff, vb, title=chain.label)
    failed = violations["pair"] or violations["visit"] or freq_violations
    return out.finish(report, EXIT_BOUND if failed else EXIT_OK)


def cover_point(chain, cfg, mu0, T_max=None):
    """One cover-time measurement; returns ``(report, summary)``."""
    W = walk.init(chain.P, mu0, tie_order=cfg.tie_order)
    summary = None
    if W.hypotheses.holds:
        summary = summarize_chain(chain, cfg, W.k)
    if T_max is None:
        if summary is None:
            raise UsageError("--tmax is required when the cover bound does not apply")
        T_max = int(math.floor(bounds.cover_bound(summary.t_star, summary.m_prime, W.k))) + 1
    return walk.cover_time(W, T_max, summary), summary


def cmd_cover(cfg: ExperimentConfig, stdout=sys.stdout) -> int:
    chain = resolve_chain(cfg)
    require_ergodic(chain, cfg)
    out = Output(cfg, "cover", stdout)
    out.note_chain(chain)
    mu0 = placement(cfg, chain.P.n)
    check_tokens(mu0)
    if cfg.tmax is not None and cfg.tmax < 1:
        raise UsageError("--tmax must be >= 1")
    rep, summary = cover_point(chain, cfg, mu0, cfg.tmax)
    doc = rep.to_dict()
    doc["chain"] = chain.label
    doc["n"] = chain.P.n
    fv = rep.first_visit
    hist = {}
    for t in fv[fv >= 0]:
        hist[int(t)] = hist.get(int(t), 0) + 1
    doc["first_visit_histogram"] = dict(sorted(hist.items()))
    if summary is not None:
        doc["m_prime"] = summary.m_prime
        if chain.graph is not None and cfg.chain == "simple":
            doc["rotor_bound"] = bounds.rotor_cover_bound(summary.t_star, chain.m, rep.k)
    out.write_text("first_visit.csv", csv_text(
        ["v", "first_visit"], [{"v": v, "first_visit": int(t)} for v, t in enumerate(fv)]))
    _figure(out, "plot_first_visits", "first_visits.png", fv, bound=rep.bound, title=chain.label)
    if not rep.covered:
        code = EXIT_HORIZON
    elif rep.bound_satisfied is False:
        code = EXIT_BOUND
    else:
        code = EXIT_OK
    return out.finish(doc, code)


def _sweep_point(args):
    cfg, axis, value = args
    row = {"axis": axis, "value": value}
    try:
        if axis == "k":
            c = dataclasses.replace(cfg, k=int(value))
            chain = resolve_chain(c)
            require_ergodic(chain, c)
            rep, _ = cover_point(chain, c, placement(c, chain.P.n), c.tmax)
        else:  # n
            c = dataclasses.replace(cfg, n=int(value))
            chain = resolve_chain(c)
            require_ergodic(chain, c)
            rep, _ = cover_point(chain, c, placement(c, chain.P.n), c.tmax)
        row.update(measured=rep.t_cover, bound=rep.bound,
                   margin=None if rep.bound is None or rep.t_cover is None else rep.bound - rep.t_cover,
                   error=None if rep.covered else f"not covered by T={rep.horizon}")
        if rep.covered and rep.bound_satisfied is False:
            row["error"] = "bound violated"
    except Exception as exc:  # per-point failures are reported, not fatal
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _sweep_T(cfg, values):
    chain = resolve_chain(cfg)
    require_ergodic(chain, cfg)
    mu0 = placement(cfg, chain.P.n)
    check_tokens(mu0)
    W = walk.init(chain.P, mu0, tie_order=cfg.tie_order)
    summary = summarize_chain(chain, cfg, W.k) if W.hypotheses.holds else None
    rows = []
    for T in sorted(int(v) for v in values):
        row = {"axis": "T", "value": T}
        try:
            walk.run(W, T - W.t)
            if summary is None:
                raise ChainPrecondition(W.hypotheses.reason)
            scaled = walk.frequency_error(W) * T / W.pi
            K = bounds.frequency_constant(summary.t_star, W.pi, summary.m_prime, W.k)
            w = int(np.argmin(K - scaled))
            row.update(measured=scaled[w], bound=K[w], margin=K[w] - scaled[w], error=None)
            if row["margin"] < -1e-9 * T:
                row["error"] = "bound violated"
        except Exception as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def parse_values(text):
    if not text:
        raise UsageError("sweep needs a nonempty --values list")
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --values {text!r}") from None
    if not vals:
        raise UsageError("sweep needs a nonempty --values list")
    return [int(v) if float(v).is_integer() else v for v in vals]


def cmd_sweep(cfg: ExperimentConfig, stdout=sys.stdout) -> int:
    if cfg.axis not in ("k", "T", "n"):
        raise UsageError("--axis must be one of k, T, n")
    values = parse_values(cfg.values)
    if cfg.axis == "n" and cfg.gen is None:
        raise UsageError("an n-axis sweep needs --gen")
    if cfg.axis == "T" and any(v < 1 for v in values):
        raise UsageError("T values must be >= 1")
    out = Output(cfg, "sweep", stdout)
    if cfg.axis == "T":
        rows = _sweep_T(cfg, values)
    else:
        values = sorted(values)
        jobs = [(cfg, cfg.axis, v) for v in values]
        if cfg.jobs and cfg.jobs > 1:
            with ProcessPoolExecutor(cfg.jobs) as pool:
                rows = list(pool.map(_sweep_point, jobs))
        else:
            rows = [_sweep_point(j) for j in jobs]
    header = ["axis", "value", "measured", "bound", "margin", "error"]
    body = csv_text(header, rows)
    out.write_text("sweep.csv", body)
    _figure(out, "plot_sweep", "sweep.png", rows, cfg.axis)
    violated = any(r.get("error") == "bound violated" for r in rows)
    failed = any(r.get("error") for r in rows)
    summary = {"axis": cfg.axis, "points": len(rows), "rows": rows}
    code = EXIT_BOUND if violated else (EXIT_HORIZON if failed else EXIT_OK)
    out.finish(summary, code)
    return code


COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "cover": cmd_cover, "sweep": cmd_sweep}


# ---------------------------------------------------------------- argparse

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    common = _Parser(add_help=False)
    S = argparse.SUPPRESS
    src = common.add_argument_group("chain")
    src.add_argument("--config", help="JSON config file; flags override it")
    src.add_argument("--graph", default=S, help="edge-list file")
    src.add_argument("--gen", default=S, choices=chains.GENERATOR_KINDS)
    src.add_argument("--n", type=int, default=S)
    src.add_argument("--p", type=float, default=S)
    src.add_argument("--seed", type=int, default=S)
    src.add_argument("--cols", type=int, default=S, help="grid width (default: square)")
    src.add_argument("--matrix", default=S, help="JSON or CSV transition matrix")
    src.add_argument("--chain", default=S, choices=chains.CHAIN_KINDS)
    src.add_argument("--alpha", type=float, default=S, help="lazy holding probability")
    src.add_argument("--beta", type=float, default=S, help="beta-walk exponent")
    run = common.add_argument_group("run")
    run.add_argument("--k", type=int, default=S)
    run.add_argument("--place", default=S, help="single:V | uniform | file:PATH | custom:a,b,...")
    run.add_argument("--steps", type=int, default=S)
    run.add_argument("--tmax", type=int, default=S, help="cover-time horizon")
    run.add_argument("--mix-tmax", dest="mix_tmax", type=int, default=S,
                     help=f"mixing-time horizon (default {DEFAULT_MIX_TMAX})")
    run.add_argument("--eps-list", dest="eps_list", default=S)
    run.add_argument("--tie-order", dest="tie_order", default=S, choices=("asc", "desc"))
    run.add_argument("--out", default=S)
    run.add_argument("--audit-identity", dest="audit_identity", action="store_true", default=S)
    run.add_argument("--dump-flows", dest="dump_flows", action="store_true", default=S)
    run.add_argument("--trace", action="store_true", default=S, help="write trace.csv")
    run.add_argument("--trace-router", dest="trace_router", action="store_true", default=S)
    run.add_argument("--figures", action="store_true", default=S, help="render PNG figures into --out")

    parser = _Parser(prog="srtwalk", description="SRT-router walk experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("analyze", "simulate", "cover"):
        sub.add_parser(name, parents=[common])
    sw = sub.add_parser("sweep", parents=[common])
    sw.add_argument("--axis", default=S, choices=("k", "T", "n"))
    sw.add_argument("--values", default=S, help="comma-separated axis values")
    sw.add_argument("--jobs", type=int, default=S)
    return parser


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = vars(ns)
    command = flags.pop("command")
    cfg_path = flags.pop("config", None)
    try:
        file_cfg = {}
        if cfg_path:
            try:
                file_cfg = json.loads(Path(cfg_path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise UsageError(f"cannot read config {cfg_path}: {exc}") from None
        cfg = ExperimentConfig.merge(file_cfg, flags)
        return COMMANDS[command](cfg, stdout=stdout)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ChainPrecondition as exc:
        print(f"chain precondition failed: {exc}", file=sys.stderr)
        return EXIT_CHAIN
    except HorizonError as exc:
        print(f"horizon exhausted: {exc}", file=sys.stderr)
        return EXIT_HORIZON


if __name__ == "__main__":
    sys.exit(main())
