"""Quantum correlation measures of spin pairs in the finite cyclic XY chain."""

from __future__ import annotations

__version__ = "0.1.0"

from .entropy import (  # noqa: E402
    LINEAR, VON_NEUMANN, EntropyFunctional, Spectrum, eval_entropy, majorizes,
    tsallis_to_renyi,
)
from .errors import (  # noqa: E402
    DomainError, NormalizationError, NumericalError, OptimizationError, QcorrError,
    ResourceError, StructureError,
)
from .measures import (  # noqa: E402
    DISCORD, BlochForm, MeasureOutcome, MeasurementDir, XState, concurrence,
    entanglement_of_formation, geometric_deficit_I2, info_deficit, quantum_discord,
    stationarity_residual,
)
from .chain import (  # noqa: E402
    ChainParams, factorized_pair_state, factorizing_field, ground_sector, pair_rdm,
)
