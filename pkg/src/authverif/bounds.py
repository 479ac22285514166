"""Closed-form completeness, soundness, acceptance and fidelity bounds.

All binomial sums are assembled in log space. Every eigenvalue and acceptance
quantity here is an instance of one kernel: the probability that at most
``delta`` of the tested copies fail, when ``n_good`` copies pass with
probability ``a`` (fail ``b``) and ``n_bad`` copies pass with probability
``c`` (fail ``d``). The double sum over ``x`` good failures and ``y`` bad
failures with ``x + y <= delta`` is evaluated as a convolution of the
``x`` terms with the prefix sums of the ``y`` terms, which is ``O(delta)`` per
copy count instead of ``O(delta**2)``.

``0**0 == 1`` throughout (via ``xlogy``), so ``p = 1`` kills every term with
a good-copy failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln, xlogy

from .errors import ContractViolation, UndefinedBoundError
from .measurement import NoiseModel
from .states import GraphSpec

# relative tolerance under which two eigenvalues count as tied
TIE_RTOL = 1e-12
_CHUNK_CELLS = 2_000_000


@dataclass(frozen=True)
class ProtocolConfig:
    """Protocol parameters: ``S`` copies, failure threshold ``delta``, noise ``p``.

    ``graph=None`` selects the Bell-pair protocol; otherwise the graph-state
    protocol on ``graph``.
    """

    S: int
    delta: int = 0
    p: float = 1.0
    graph: Optional[GraphSpec] = None

    def __post_init__(self):
        if int(self.S) != self.S or self.S < 2:
            raise ContractViolation(f"S must be an integer >= 2, got {self.S}")
        if int(self.delta) != self.delta or not 0 <= self.delta <= self.S - 1:
            raise ContractViolation(f"delta must lie in 0..{self.S - 1}, got {self.delta}")
        NoiseModel(self.p)

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(self.p)

    @property
    def family(self) -> str:
        return "bell" if self.graph is None else "graph"

    def replace(self, **changes) -> "ProtocolConfig":
        data = dict(S=self.S, delta=self.delta, p=self.p, graph=self.graph)
        data.update(changes)
        return ProtocolConfig(**data)

    def test_rates(self) -> tuple[float, float, float, float]:
        """Eigenvalues of the pass/fail elements on the target and its complement.

        Returns ``(pass|target, fail|target, pass|orthogonal, fail|orthogonal)``.
        """
        p = self.p
        good = ((1 + p) / 2, (1 - p) / 2)
        if self.graph is None:
            return good + ((3 - p) / 6, (3 + p) / 6)
        return good + (0.5, 0.5)


@dataclass
class BoundResult:
    completeness: float
    soundness: float
    argmax_k: int
    eigenvalue_table: Optional[np.ndarray] = field(default=None, repr=False)
    fidelity_lower_bound: Optional[float] = None
    acceptance_probability: Optional[float] = None

    @property
    def informative(self) -> bool:
        """False when the certified fidelity bound is negative (certifies nothing)."""
        return self.fidelity_lower_bound is None or self.fidelity_lower_bound >= 0

    def table(self) -> dict[int, float]:
        if self.eigenvalue_table is None:
            return {}
        return {k: float(g) for k, g in enumerate(self.eigenvalue_table)}


# -- log-space kernel ----------------------------------------------------------

def _log_binom(n, x):
    n = np.asarray(n, dtype=float)
    x = np.asarray(x, dtype=float)
    valid = (x >= 0) & (x <= n)
    with np.errstate(invalid="ignore"):
        out = gammaln(n + 1) - gammaln(x + 1) - gammaln(np.where(valid, n - x, 0) + 1)
    return np.where(valid, out, -np.inf)


def _binomial_terms(n, delta, pass_prob, fail_prob):
    """Log of ``C(n, x) pass**(n-x) fail**x`` for ``x = 0..delta``; rows follow ``n``."""
    n = np.asarray(n, dtype=float)[:, None]
    x = np.arange(delta + 1, dtype=float)[None, :]
    valid = x <= n
    rest = np.where(valid, n - x, 0.0)
    out = _log_binom(n, x) + xlogy(rest, pass_prob) + xlogy(x, fail_prob)
    return np.where(valid, out, -np.inf)


def _logsumexp(a, axis=-1):
    m = np.max(a, axis=axis, keepdims=True)
    finite = np.isfinite(m)
    shifted = np.where(finite, a - np.where(finite, m, 0.0), -np.inf)
    with np.errstate(divide="ignore"):
        s = np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))
    return np.squeeze(np.where(finite, m + s, -np.inf), axis=axis)


def log_two_population_cdf(n_good, n_bad, delta: int, a: float, b: float,
                           c: float, d: float) -> np.ndarray:
    """``log P(failures <= delta)`` for independent good and bad copies.

    ``n_good`` and ``n_bad`` are equal-length arrays of copy counts.
    """
    n_good = np.atleast_1d(np.asarray(n_good, dtype=float))
    n_bad = np.atleast_1d(np.asarray(n_bad, dtype=float))
    out = np.empty(n_good.shape[0])
    rows = max(1, _CHUNK_CELLS // (delta + 1))
    for start in range(0, n_good.shape[0], rows):
        sl = slice(start, start + rows)
        log_a = _binomial_terms(n_good[sl], delta, a, b)
        log_b = _binomial_terms(n_bad[sl], delta, c, d)
        with np.errstate(invalid="ignore"):
            cum_b = np.logaddexp.accumulate(log_b, axis=1)
        out[sl] = _logsumexp(log_a + cum_b[:, ::-1], axis=1)
    return out


def _log_eigenvalues(cfg: ProtocolConfig, ks) -> np.ndarray:
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    a, b, c, d = cfg.test_rates()
    out = np.full(ks.shape, -np.inf)
    pos = ks >= 1
    if np.any(pos):
        k = ks[pos]
        with np.errstate(divide="ignore"):
            prefactor = np.log(k) - math.log(cfg.S)
        out[pos] = prefactor + log_two_population_cdf(cfg.S - k, k - 1, cfg.delta, a, b, c, d)
    return out


# -- public bounds -------------------------------------------------------------

def eigenvalue_g(cfg: ProtocolConfig, k: int) -> float:
    """Eigenvalue of the soundness operator on patterns with ``k`` orthogonal copies."""
    if int(k) != k or not 0 <= k <= cfg.S:
        raise ContractViolation(f"k must lie in 0..{cfg.S}, got {k}")
    return float(np.exp(_log_eigenvalues(cfg, [k])[0]))


def eigenvalue_table(cfg: ProtocolConfig) -> np.ndarray:
    """``g(k)`` for ``k = 0..S``."""
    return np.exp(_log_eigenvalues(cfg, np.arange(cfg.S + 1)))


def completeness(cfg: ProtocolConfig) -> float:
    """Acceptance probability of the honest run: a binomial CDF in ``(1 + p)/2``."""
    a, b, _, _ = cfg.test_rates()
    log_c = log_two_population_cdf([cfg.S - 1], [0], cfg.delta, a, b, 1.0, 0.0)[0]
    return float(min(1.0, np.exp(log_c)))


def soundness(cfg: ProtocolConfig, keep_table: bool = True) -> BoundResult:
    """Maximise ``g(k)`` over ``k = 1..S`` by exhaustive scan.

    Ties (within ``TIE_RTOL`` relative) resolve to the smallest ``k``.
    """
    log_g = _log_eigenvalues(cfg, np.arange(cfg.S + 1))
    best = np.max(log_g[1:])
    argmax = 1 + int(np.flatnonzero(log_g[1:] >= best + math.log1p(-TIE_RTOL))[0])
    table = np.exp(log_g)
    return BoundResult(
        completeness=completeness(cfg),
        soundness=float(np.exp(best)),
        argmax_k=argmax,
        eigenvalue_table=table if keep_table else None,
    )


def werner_pass_probability(v: float, eta: float = 0.0, p: float = 1.0) -> float:
    """Per-test pass probability ``(3 + 3pv - 4pv eta) / 6`` for a Werner copy."""
    _check_werner(v, eta)
    return (3 + 3 * p * v - 4 * p * v * eta) / 6


def werner_fail_probability(v: float, eta: float = 0.0, p: float = 1.0) -> float:
    _check_werner(v, eta)
    return (3 - 3 * p * v + 4 * p * v * eta) / 6


def werner_acceptance(cfg: ProtocolConfig, v: float, eta: float = 0.0) -> float:
    """Acceptance probability when every copy is a generalised Werner state."""
    if cfg.graph is not None:
        raise ContractViolation("Werner sources are defined for the Bell family only")
    q = werner_pass_probability(v, eta, cfg.p)
    fq = werner_fail_probability(v, eta, cfg.p)
    log_acc = log_two_population_cdf([cfg.S - 1], [0], cfg.delta, q, fq, 1.0, 0.0)[0]
    return float(min(1.0, np.exp(log_acc)))


def adversarial_acceptance(cfg: ProtocolConfig, k: int) -> float:
    """Acceptance probability when ``k`` copies lie in the orthogonal complement.

    The held-out copy is uniform, so it is bad with probability ``k/S``.
    """
    if not 0 <= k <= cfg.S:
        raise ContractViolation(f"k must lie in 0..{cfg.S}, got {k}")
    a, b, c, d = cfg.test_rates()
    total = 0.0
    if k >= 1:
        total += k / cfg.S * np.exp(
            log_two_population_cdf([cfg.S - k], [k - 1], cfg.delta, a, b, c, d)[0])
    if k < cfg.S:
        total += (cfg.S - k) / cfg.S * np.exp(
            log_two_population_cdf([cfg.S - k - 1], [k], cfg.delta, a, b, c, d)[0])
    return float(min(1.0, total))


def fidelity_lower_bound(cfg: ProtocolConfig, acceptance: float,
                         soundness_value: Optional[float] = None) -> float:
    """``1 - soundness / acceptance``; negative values are returned unclamped."""
    if not acceptance > 0:
        raise UndefinedBoundError(f"fidelity bound needs positive acceptance, got {acceptance}")
    eps = soundness(cfg, keep_table=False).soundness if soundness_value is None else soundness_value
    return 1.0 - eps / acceptance


def evaluate(cfg: ProtocolConfig, v: Optional[float] = None, eta: float = 0.0) -> BoundResult:
    """All bounds for ``cfg``; with ``v`` also the Werner acceptance and fidelity bound."""
    result = soundness(cfg)
    if v is not None:
        acc = werner_acceptance(cfg, v, eta)
        result.acceptance_probability = acc
        if acc > 0:
            result.fidelity_lower_bound = fidelity_lower_bound(cfg, acc, result.soundness)
    return result


def _check_werner(v, eta):
    if not (0 <= v <= 1 and 0 <= eta <= 1):
        raise ContractViolation(f"werner parameters out of range: v={v}, eta={eta}")
