"""Greedy least-squares pursuits for sparse synthesis and cosparse analysis recovery."""

__version__ = "0.1.0"

from .errors import GreedyLSError  # noqa: E402
from .synthesis import (SynthesisProblem, RecoveryResult, omp_solve, ols_solve,  # noqa: E402
                        fols_solve, olsr_solve, iolsr_solve)
from .analysis import (AnalysisProblem, AnalysisResult, analysis_ls, gap_solve,  # noqa: E402
                       gals_solve, galsr_solve)

__all__ = [
    "GreedyLSError", "SynthesisProblem", "RecoveryResult", "omp_solve", "ols_solve",
    "fols_solve", "olsr_solve", "iolsr_solve", "AnalysisProblem", "AnalysisResult",
    "analysis_ls", "gap_solve", "gals_solve", "galsr_solve",
]
