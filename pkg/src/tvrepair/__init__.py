"""Optimal total-variation data repair for statistical parity."""

from .errors import *  # noqa: F401,F403
from .prob import *  # noqa: F401,F403
from .lp import LpProblem, LpSolution, Status, check_feasible
from .lp import solve as solve_lp
from .repair import *  # noqa: F401,F403
from .fairness import *  # noqa: F401,F403
from .privacy import *  # noqa: F401,F403
from .census import (DiscreteDataset, FeatureBins, RecordSet, Schema, apply_repair,
                     default_schema, discretize, estimate, histogram, load_csv, load_schema)

__version__ = "0.1.0"
