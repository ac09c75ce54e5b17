"""Deterministic interpreter with an abstract cost model."""

from .builtins import Lcg, format_c
from .cost import (
    CATEGORIES, DEFAULT_COST_MODEL, DEFAULT_WEIGHTS, AttributionRow, CostModel,
    CostReport, cost_attribution, rounded_shares,
)
from .machine import ExecResult, RunConfig, run

__all__ = [
    "CATEGORIES", "DEFAULT_COST_MODEL", "DEFAULT_WEIGHTS", "AttributionRow", "CostModel",
    "CostReport", "ExecResult", "Lcg", "RunConfig", "cost_attribution", "format_c",
    "rounded_shares", "run",
]
