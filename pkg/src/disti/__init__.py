"""Exact distribution-transformer semantics and bounded verification for probabilistic programs."""

from .dist import EventPred, SubDist, dirac, dist_eq, substitute
from .lang import State, TableEnv, pretty
from .parse import parse_expr, parse_pred, parse_program
from .semantics import denote, denote_loop_bounded, denote_loopfree, guarded_step

__all__ = [
    "EventPred", "SubDist", "dirac", "dist_eq", "substitute",
    "State", "TableEnv", "pretty",
    "parse_expr", "parse_pred", "parse_program",
    "denote", "denote_loop_bounded", "denote_loopfree", "guarded_step",
]

__version__ = "0.1.0"
