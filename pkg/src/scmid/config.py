"""Numeric defaults shared by the solver, the deciders and the CLI."""

from __future__ import annotations

import os

BOX = 10.0
SPLIT_BUDGET = 1_000_000
RESIDUAL_TOL = 1e-9
DEDUP_TOL = 1e-6
RANK_TOL = 1e-8
MIN_WIDTH = 1e-9
SEEDS = (0, 1, 2, 3, 4)
SAMPLES = 5

# generic-point grid: numerators in ±1..±5, denominators in 1..3
SAMPLE_NUMERATOR_MAX = 5
SAMPLE_DENOMINATOR_MAX = 3

THREADS_ENV = "SCMID_THREADS"


def threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def defaults() -> dict:
    return {
        "box": BOX,
        "split_budget": SPLIT_BUDGET,
        "residual_tol": RESIDUAL_TOL,
        "dedup_tol": DEDUP_TOL,
        "rank_tol": RANK_TOL,
        "min_width": MIN_WIDTH,
        "seeds": list(SEEDS),
        "samples": SAMPLES,
        "sample_grid": {"numerator_max": SAMPLE_NUMERATOR_MAX, "denominator_max": SAMPLE_DENOMINATOR_MAX},
    }
