"""Security bounds, brute-force oracles and Monte-Carlo simulation for
stabiliser-based authenticated teleportation and graph-state verification."""

from .bounds import (
    BoundResult,
    ProtocolConfig,
    completeness,
    eigenvalue_g,
    evaluate,
    fidelity_lower_bound,
    soundness,
    werner_acceptance,
)
from .measurement import NoiseModel, TestPovm, accept_povm, bell_test_povm, graph_test_povm
from .states import (
    AdversarialSource,
    GraphSpec,
    IdealSource,
    WernerSource,
    bell_projector,
    graph_state,
    stabiliser_group,
    werner_state,
)

__version__ = "0.1.0"
