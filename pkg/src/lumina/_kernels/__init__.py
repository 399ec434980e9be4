"""Kernel lane selection: compiled extension if available, else pure Python.

Set ``LUMINA_PURE_PYTHON=1`` to force the pure lane (used by the parity
tests and the benchmark).
"""

from __future__ import annotations

import os

from . import pure as _pure

if os.environ.get("LUMINA_PURE_PYTHON"):
    _impl = _pure
    BACKEND = "python"
else:
    try:
        from . import _cykernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _pure
        BACKEND = "python"

HOLE_COST = _pure.HOLE_COST
STEP_COST = _pure.STEP_COST

list_solvable = _impl.list_solvable
list_optimal_pops = _impl.list_optimal_pops
grid_min_cost_from = _impl.grid_min_cost_from
grid_min_cost_to = _impl.grid_min_cost_to

__all__ = [
    "BACKEND",
    "HOLE_COST",
    "STEP_COST",
    "list_solvable",
    "list_optimal_pops",
    "grid_min_cost_from",
    "grid_min_cost_to",
]
