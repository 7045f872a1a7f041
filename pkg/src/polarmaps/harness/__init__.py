"""Problem specs, trajectory runs, baseline integrators and built-in problems."""
from .integrators import compare_integrators
from .problems import builtin_problems, get_problem, random_quartic_problem, rotational
from .runner import RunReport, run_trajectory, summarize
from .spec import ProblemSpec, load_spec, parse_spec

__all__ = [
    "ProblemSpec",
    "RunReport",
    "builtin_problems",
    "compare_integrators",
    "get_problem",
    "load_spec",
    "parse_spec",
    "random_quartic_problem",
    "rotational",
    "run_trajectory",
    "summarize",
]
