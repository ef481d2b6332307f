"""Stateless model checking of await loops under weak memory models."""

from .explorer import (
    ATViolation,
    ExploreOptions,
    FragmentError,
    Inconclusive,
    SafetyViolation,
    SearchStats,
    Success,
    Verdict,
    explore,
)
from .graph import ExecutionGraph
from .lang import Mode, Program
from .memmodel import cons_ramm, cons_sc, get_model
from .surface import SurfaceError, parse_program

__all__ = [
    "ATViolation",
    "ExecutionGraph",
    "ExploreOptions",
    "FragmentError",
    "Inconclusive",
    "Mode",
    "Program",
    "SafetyViolation",
    "SearchStats",
    "Success",
    "SurfaceError",
    "Verdict",
    "cons_ramm",
    "cons_sc",
    "explore",
    "get_model",
    "parse_program",
]
