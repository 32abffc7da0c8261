"""Select the simplex kernel backend at import time.

The compiled Cython kernel is used when available; otherwise the pure
numpy implementation. Both produce bit-identical (psi, value, iterations)
so the choice never affects transcripts. Override with the environment
variable OMNICAL_LP_BACKEND in {"auto", "py", "cy"}.
"""

from __future__ import annotations

import os

from ._simplex_py import SolverError
from ._simplex_py import solve_game_lp as _solve_py

_requested = os.environ.get("OMNICAL_LP_BACKEND", "auto")

if _requested not in ("auto", "py", "cy"):
    raise RuntimeError(f"OMNICAL_LP_BACKEND must be auto, py or cy, got {_requested!r}")

BACKEND = "py"
solve_game_lp = _solve_py

if _requested in ("auto", "cy"):
    try:
        from ._simplex_cy import solve_game_lp as _solve_cy

        BACKEND = "cy"
        solve_game_lp = _solve_cy
    except ImportError:
        if _requested == "cy":
            raise
        # extension not built; the numpy kernel is a complete fallback

__all__ = ["solve_game_lp", "BACKEND", "SolverError"]
