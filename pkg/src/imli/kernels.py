"""Solver kernel backend selection.

Prefers the compiled extension when it importable, otherwise falls back to
the pure-Python implementation. Both expose the same functions and are
bit-identical for a given seed; see ``benchmarks/bench_kernels.py`` for the
speed difference.
"""

from __future__ import annotations

try:
    from imli import _kernels as _impl

    COMPILED = True
except ImportError:  # pragma: no cover - depends on build environment
    from imli import _kernels_py as _impl

    COMPILED = False

BACKEND = "compiled" if COMPILED else "python"

rule_cost = _impl.rule_cost
bruteforce = _impl.bruteforce
local_search = _impl.local_search
