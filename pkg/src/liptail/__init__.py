"""liptail: contractive infinite-memory processes, their Lipschitz weight
tables, and verified deviation/moment bounds for separately Lipschitz
functionals."""

__version__ = "0.1.0"

from .profiles import (  # noqa: F401
    ContractionProfile,
    GeometricTail,
    LipschitzTable,
    PowerTail,
    build_lipschitz_table,
    diagonal_uniform_bound,
)
from .innovations import InnovationLaw  # noqa: F401
from .functionals import FunctionalSpec  # noqa: F401
from .processes import (  # noqa: F401
    InitialPast,
    LagLaw,
    ProcessSpec,
    Trajectory,
    contraction_certificate,
    coupled_discrepancy,
    dominating_sample,
    simulate,
    step,
)
