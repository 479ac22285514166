"""Brute-force checks of the closed-form soundness bound.

Two routes, sharing no code with each other or with :mod:`authverif.bounds`:

* :func:`build_q_dense` materialises
  ``Q = (1/S) sum_r (1 - Pi)_r (x) M_ACC`` as a dense matrix from the POVM
  constructors and diagonalises it.
* :func:`enumerate_q_eigenvalues` walks every placement of ``Pi`` / ``Pi_perp``
  over the ``S`` copies and sums, over ``r`` and over every allowed failure
  set, the scalar actions of the pass/fail elements on each placement.
  Permutation symmetry (the value depends only on the number of orthogonal
  copies) is checked, not assumed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg, measurement, states
from .bounds import ProtocolConfig
from .errors import ContractViolation, DimensionCapError

PATTERN_CAP = 20
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class QOperator:
    """Either a dense matrix or a map from copy patterns to eigenvalues.

    Patterns are tuples of 0/1 with 1 marking an orthogonal (``Pi_perp``) copy.
    """

    dense: Optional[np.ndarray] = None
    patterns: Optional[dict] = None

    def eigenvalues(self) -> np.ndarray:
        if self.dense is not None:
            return linalg.hermitian_eigenvalues(self.dense)
        return np.sort(np.fromiter(self.patterns.values(), float))[::-1]

    def max_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])

    def by_k(self, tol: float = SYMMETRY_TOL) -> dict[int, float]:
        """Collapse patterns to ``k -> eigenvalue``, verifying they agree per ``k``."""
        if self.patterns is None:
            raise ContractViolation("by_k needs the enumerated form")
        out: dict[int, float] = {}
        for pattern, value in self.patterns.items():
            k = sum(pattern)
            if k in out and abs(out[k] - value) > tol:
                raise AssertionError(
                    f"permutation symmetry broken at k={k}: {out[k]!r} vs {value!r}")
            out.setdefault(k, value)
        return dict(sorted(out.items()))


def target_and_test(cfg: ProtocolConfig) -> tuple[np.ndarray, measurement.TestPovm]:
    if cfg.graph is None:
        return states.bell_projector(), measurement.bell_test_povm(cfg.noise)
    return states.graph_state(cfg.graph), measurement.graph_test_povm(cfg.graph, cfg.noise)


def copy_dim(cfg: ProtocolConfig) -> int:
    return 4 if cfg.graph is None else cfg.graph.dim


def max_dense_S(cfg: ProtocolConfig, cap: int = measurement.DENSE_DIM_CAP) -> int:
    d = copy_dim(cfg)
    s = 1
    while d ** (s + 1) <= cap:
        s += 1
    return s


def build_q_dense(cfg: ProtocolConfig, cap: int = measurement.DENSE_DIM_CAP) -> QOperator:
    d = copy_dim(cfg)
    if d**cfg.S > cap:
        raise DimensionCapError(
            f"dense Q for S={cfg.S} needs dimension {d ** cfg.S} > {cap}; "
            f"use S <= {max_dense_S(cfg, cap)}")
    pi, test = target_and_test(cfg)
    perp = linalg.identity(d) - pi
    rest = measurement.tested_accept_operator(test, cfg.S - 1, cfg.delta, cap)
    q = sum(linalg.embed_at(perp, rest, r, cfg.S, d) for r in range(cfg.S)) / cfg.S
    return QOperator(dense=q)


def _action_rules(cfg: ProtocolConfig) -> dict[tuple[str, int], float]:
    """Scalar by which each test element multiplies ``Pi`` (0) or ``Pi_perp`` (1)."""
    p = cfg.p
    if cfg.graph is None:
        perp_pass, perp_fail = (3 - p) / 6, (3 + p) / 6
    else:
        perp_pass = perp_fail = 0.5
    return {
        ("pass", 0): (1 + p) / 2,
        ("fail", 0): (1 - p) / 2,
        ("pass", 1): perp_pass,
        ("fail", 1): perp_fail,
    }


def pattern_eigenvalue(cfg: ProtocolConfig, pattern, rules=None) -> float:
    """Eigenvalue of ``Q`` on one ``Pi``/``Pi_perp`` placement."""
    rules = rules or _action_rules(cfg)
    S = cfg.S
    total = 0.0
    for r in range(S):
        if not pattern[r]:
            continue  # (1 - Pi) Pi = 0
        others = [i for i in range(S) if i != r]
        for size in range(cfg.delta + 1):
            for failed in itertools.combinations(others, size):
                term = 1.0
                for i in others:
                    term *= rules["fail" if i in failed else "pass", pattern[i]]
                total += term
    return total / S


def enumerate_q_eigenvalues(cfg: ProtocolConfig, cap: int = PATTERN_CAP) -> QOperator:
    if cfg.S > cap:
        raise DimensionCapError(f"pattern enumeration limited to S <= {cap}, got {cfg.S}")
    rules = _action_rules(cfg)
    patterns = {
        pattern: pattern_eigenvalue(cfg, pattern, rules)
        for pattern in itertools.product((0, 1), repeat=cfg.S)
    }
    return QOperator(patterns=patterns)


def dense_completeness(cfg: ProtocolConfig, r: int = 1,
                       cap: int = measurement.DENSE_DIM_CAP) -> float:
    """``Tr[Pi_r (x) M_ACC  Pi^{(x)S}]`` by explicit matrices."""
    pi, test = target_and_test(cfg)
    m_acc = measurement.accept_povm(test, cfg.S, r, cfg.delta, cap)
    ideal = linalg.kron_power(pi, cfg.S)
    full = m_acc @ linalg.embed_at(pi, linalg.identity(pi.shape[0] ** (cfg.S - 1)),
                                   r - 1, cfg.S, pi.shape[0])
    return linalg.trace_product(full, ideal).real


@dataclass
class OracleReport:
    closed_form: float
    dense: Optional[float]
    enumerated: float
    completeness_closed: float
    completeness_dense: Optional[float]
    tol: float = 1e-9

    @property
    def passed(self) -> bool:
        ok = abs(self.closed_form - self.enumerated) <= self.tol
        if self.dense is not None:
            ok &= abs(self.closed_form - self.dense) <= self.tol
            ok &= abs(self.dense - self.enumerated) <= self.tol
        if self.completeness_dense is not None:
            ok &= abs(self.completeness_closed - self.completeness_dense) <= 1e-10
        return bool(ok)


def verify(cfg: ProtocolConfig, with_dense: bool = True, tol: float = 1e-9) -> OracleReport:
    """Compare the closed form with both oracles for one configuration."""
    from .bounds import completeness, soundness

    dense = dense_c = None
    if with_dense:
        dense = build_q_dense(cfg).max_eigenvalue()
        dense_c = dense_completeness(cfg)
    enum = enumerate_q_eigenvalues(cfg)
    enum.by_k()
    return OracleReport(
        closed_form=soundness(cfg, keep_table=False).soundness,
        dense=dense,
        enumerated=enum.max_eigenvalue(),
        completeness_closed=completeness(cfg),
        completeness_dense=dense_c,
        tol=tol,
    )
