"""Production-line planning toolkit: time-domain simulation, free-stage
space reduction, bitstring encodings, metaheuristic solvers, and a
tensor-network generative booster, served over HTTP with a CLI client."""

__version__ = "0.1.0"

from .catalog import ProblemCatalog, default_catalog, load_catalog  # noqa: F401
from .simulate import CostValue, LineConfig, ShopState, SimResult, cost, evaluate, simulate  # noqa: F401
from .freestage import ReducedSpace, StageIndexer, pgco_search, reduce_space  # noqa: F401
