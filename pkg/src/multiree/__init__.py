"""Relative entropy of entanglement for multipartite states, with bound checks."""

from .states import (
    PartyStructure,
    PureState,
    QuantumState,
    from_pure,
    haar_random_pure,
    make_named_state,
    partial_trace,
    quantum_relative_entropy,
    von_neumann_entropy,
)
from .optimizer import (
    OptimizerConfig,
    ReeResult,
    SeparableEnsemble,
    ensemble_to_state,
    pure_state_ree_oracle,
    relative_entropy_of_entanglement,
)

__version__ = "0.1.0"
