"""POVM elements for single test rounds and for the overall accept decision."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg, states
from .errors import ContractViolation, DimensionCapError

# largest register the dense constructions will build (4**6 = 8**4)
DENSE_DIM_CAP = 4096


@dataclass(frozen=True)
class NoiseModel:
    """With probability ``p`` a test is ideal, otherwise its outcome is a fair coin."""

    p: float = 1.0

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ContractViolation(f"noise parameter p must lie in [0, 1], got {self.p}")


@dataclass(frozen=True, eq=False)
class TestPovm:
    pass_op: np.ndarray
    fail_op: np.ndarray
    family: str

    __test__ = False  # not a pytest class

    @property
    def dim(self) -> int:
        return self.pass_op.shape[0]


def _noise(noise) -> NoiseModel:
    return noise if isinstance(noise, NoiseModel) else NoiseModel(float(noise))


def noisy_stabiliser_pass(stabiliser: np.ndarray, p: float) -> np.ndarray:
    """``p (1 + S)/2 + (1 - p) 1/2``: pass element of one noisy stabiliser test."""
    eye = linalg.identity(stabiliser.shape[0])
    return p * (eye + stabiliser) / 2 + (1 - p) * eye / 2


def bell_test_povm(noise=NoiseModel()) -> TestPovm:
    """Closed-form Bell-pair test: ``pass = ((3 - p) 1 + 4 p Pi) / 6``."""
    p = _noise(noise).p
    eye = linalg.identity(4)
    pi = states.bell_projector()
    pass_op = ((3 - p) * eye + 4 * p * pi) / 6
    fail_op = ((3 + p) * eye - 4 * p * pi) / 6
    return TestPovm(pass_op, fail_op, "bell")


def graph_test_povm(g: states.GraphSpec, noise=NoiseModel(),
                    cap: int = DENSE_DIM_CAP) -> TestPovm:
    """Closed-form graph-state test: ``pass = (1 + p Pi) / 2``."""
    p = _noise(noise).p
    if g.dim > cap:
        raise DimensionCapError(f"graph dimension {g.dim} exceeds cap {cap}")
    eye = linalg.identity(g.dim)
    pi = states.graph_state(g)
    return TestPovm((eye + p * pi) / 2, (eye - p * pi) / 2, f"graph({g.n})")


def averaged_test_povm(group: states.StabiliserGroup, noise=NoiseModel(),
                       include_identity: bool = True, family: str = "averaged") -> TestPovm:
    """Average the noisy pass elements of the group's stabiliser tests.

    The Bell protocol draws only the three non-identity stabilisers, the graph
    protocol draws from the whole group; ``include_identity`` selects which.
    """
    p = _noise(noise).p
    mats = [e.matrix() for e in group if include_identity or set(e.letters) != {"I"}]
    pass_op = sum(noisy_stabiliser_pass(m, p) for m in mats) / len(mats)
    return TestPovm(pass_op, linalg.identity(pass_op.shape[0]) - pass_op, family)


def tested_accept_operator(test: TestPovm, m: int, delta: int,
                           cap: int = DENSE_DIM_CAP) -> np.ndarray:
    """Accept element on ``m`` tested copies: sum over failure sets of size <= ``delta``."""
    if m < 1:
        raise ContractViolation("need at least one tested copy")
    if test.dim**m > cap:
        raise DimensionCapError(f"{m} tested copies of dimension {test.dim} exceed cap {cap}")
    if delta >= m:
        return linalg.identity(test.dim**m)
    total = np.zeros((test.dim**m,) * 2, dtype=complex)
    for d in range(delta + 1):
        for failed in itertools.combinations(range(m), d):
            fs = set(failed)
            total += linalg.kron_all(test.fail_op if i in fs else test.pass_op for i in range(m))
    return total


def accept_povm(test: TestPovm, S: int, r: int, delta: int,
                cap: int = DENSE_DIM_CAP) -> np.ndarray:
    """``M_ACC`` on all ``S`` copies, identity on the held-out copy ``r`` (1-based)."""
    _check_protocol_shape(S, r, delta)
    if test.dim**S > cap:
        raise DimensionCapError(
            f"S={S} copies of dimension {test.dim} exceed dense cap {cap}")
    rest = tested_accept_operator(test, S - 1, delta, cap)
    return linalg.embed_at(linalg.identity(test.dim), rest, r - 1, S, test.dim)


def _check_protocol_shape(S: int, r: Optional[int], delta: int) -> None:
    if S < 2:
        raise ContractViolation(f"need S >= 2 copies, got {S}")
    if r is not None and not 1 <= r <= S:
        raise ContractViolation(f"held-out copy r={r} outside 1..{S}")
    if not 0 <= delta <= S - 1:
        raise ContractViolation(f"threshold delta={delta} outside 0..{S - 1}")
