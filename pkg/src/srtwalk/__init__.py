"""Deterministic random walks (SRT-router) with k tokens and their analysis."""

from .markov import (TransitionMatrix, validate, check_irreducible, check_aperiodic,
                     stationary_distribution, evolve, tv_distance, mixing_profile,
                     check_reversible)
from .chains import Graph, generate, load_graph, load_matrix, save_matrix, build_chain
from .router import RouterState, srt_sequence
from .walk import WalkState, init, step, run, cover_time
from .bounds import ChainSummary, summarize

__version__ = "0.1.0"
