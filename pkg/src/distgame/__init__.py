"""Zero-sum games with distribution-valued payoffs."""

from .errors import ConfigError, ContractError, InputError, NotVerifiable, UndecidableError
from .fp import EquilibriumResult, GameMatrix, solve
from .kde import EPANECHNIKOV, GAUSSIAN, Explicit, KdeModel, PowerLaw, SampleSet, estimate, truncate
from .mgss import MultiGoalGame, build_compound, solve_mgss, verify_zero_sum
from .preference import MixtureModel, PointMass, PreferenceOutcome, compare, moment
from .tailrep import DerivVector, LexOrdering, gaussian_kde_derivs, lex_compare

__all__ = [
    "ConfigError",
    "ContractError",
    "DerivVector",
    "EPANECHNIKOV",
    "EquilibriumResult",
    "Explicit",
    "GAUSSIAN",
    "GameMatrix",
    "InputError",
    "KdeModel",
    "LexOrdering",
    "MixtureModel",
    "MultiGoalGame",
    "NotVerifiable",
    "PointMass",
    "PowerLaw",
    "PreferenceOutcome",
    "SampleSet",
    "UndecidableError",
    "build_compound",
    "compare",
    "estimate",
    "gaussian_kde_derivs",
    "lex_compare",
    "moment",
    "solve",
    "solve_mgss",
    "truncate",
    "verify_zero_sum",
]
