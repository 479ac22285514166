"""Monte-Carlo runs of the verification protocols, plus the teleportation channel.

Copies are tested on disjoint registers, so each test round is sampled from
its two-outcome Born probability alone; no post-measurement state is kept.

Randomness: numpy's Philox (counter-based) bit generator. Trials are grouped
in fixed blocks of ``CHUNK_TRIALS``; block ``c`` of a run seeded with ``seed``
uses ``SeedSequence([seed, c])``. Results therefore do not depend on how many
worker threads process the blocks. ``RNG_ALGORITHM`` names this scheme and is
recorded in every manifest.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import bounds, linalg, states
from .bounds import ProtocolConfig
from .errors import ContractViolation

CHUNK_TRIALS = 1024
RNG_ALGORITHM = "philox4x64/seedsequence([seed,block])/block=1024/v1"
THREADS_ENV = "AUTHVERIF_THREADS"


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    trials: int
    seed: int

    @classmethod
    def bernoulli(cls, hits: int, trials: int, seed: int) -> "Estimate":
        mean = hits / trials
        return cls(mean, float(np.sqrt(mean * (1 - mean) / trials)), trials, seed)


@dataclass(frozen=True)
class TrialOutcome:
    accepted: bool
    tests_failed: int
    r_copy_bad: bool
    r: int
    transcript: Optional[tuple] = None


@dataclass(frozen=True, eq=False)
class CopyModel:
    """Per-copy sampling tables derived from a protocol config and a source.

    ``labels[i]`` indexes the state of copy ``i``; ``born[label, j]`` is the
    ideal pass probability of stabiliser ``j`` on that state and
    ``perp[label]`` the probability that an ideal projective check against the
    target fails.
    """

    labels: np.ndarray
    born: np.ndarray
    perp: np.ndarray
    stabilisers: tuple[str, ...]
    p: float


def _stabiliser_tests(cfg: ProtocolConfig):
    if cfg.graph is None:
        group = [e for e in states.bell_stabiliser_group() if set(e.letters) != {"I"}]
        return states.bell_projector(), group
    return states.graph_state(cfg.graph), list(states.stabiliser_group(cfg.graph))


def copy_states(cfg: ProtocolConfig, source: states.SourceModel) -> list[np.ndarray]:
    """Distinct copy states, ideal first; copies ``1..k`` carry the bad state."""
    target = states.bell_projector() if cfg.graph is None else states.graph_state(cfg.graph)
    if isinstance(source, states.IdealSource):
        return [target]
    if isinstance(source, states.WernerSource):
        if cfg.graph is not None:
            raise ContractViolation("Werner sources are defined for the Bell family only")
        return [source.state()]
    if isinstance(source, states.AdversarialSource):
        if source.k > cfg.S:
            raise ContractViolation(f"k={source.k} bad copies exceeds S={cfg.S}")
        bad = source.bad_state
        if bad is None and cfg.graph is not None:
            bad = states.graph_bad_state(cfg.graph)
        return [target, states.orthogonal_bad_state(bad, target)]
    raise ContractViolation(f"unknown source model {source!r}")


def copy_model(cfg: ProtocolConfig, source: states.SourceModel) -> CopyModel:
    target, tests = _stabiliser_tests(cfg)
    rhos = copy_states(cfg, source)
    eye = linalg.identity(target.shape[0])
    born = np.array([[linalg.trace_product((eye + t.matrix()) / 2, rho).real for t in tests]
                     for rho in rhos])
    perp = np.array([linalg.trace_product(eye - target, rho).real for rho in rhos])
    labels = np.zeros(cfg.S, dtype=np.intp)
    if isinstance(source, states.AdversarialSource):
        labels[: source.k] = 1
    return CopyModel(labels, np.clip(born, 0, 1), np.clip(perp, 0, 1),
                     tuple(str(t) for t in tests), cfg.p)


def _block(model: CopyModel, n: int, rng: np.random.Generator):
    S = model.labels.shape[0]
    r = rng.integers(S, size=n)
    stab = rng.integers(len(model.stabilisers), size=(n, S))
    noisy = rng.random((n, S)) >= model.p
    u = rng.random((n, S))
    check = rng.random(n)
    born = model.born[model.labels[None, :], stab]
    passed = u < np.where(noisy, 0.5, born)
    passed[np.arange(n), r] = True  # the held-out copy is not tested
    tests_failed = S - passed.sum(axis=1)
    r_bad = check < model.perp[model.labels[r]]
    return r, stab, passed, tests_failed, r_bad


def _rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))


def worker_count() -> int:
    cap = os.environ.get(THREADS_ENV)
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def sample_counts(cfg: ProtocolConfig, source: states.SourceModel, trials: int,
                  seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial number of failed tests and whether copy ``r`` fails the target check.

    Independent of ``cfg.delta``; thresholds are applied afterwards.
    """
    if trials < 1:
        raise ContractViolation("need at least one trial")
    model = copy_model(cfg, source)
    sizes = [min(CHUNK_TRIALS, trials - s) for s in range(0, trials, CHUNK_TRIALS)]

    def run(block):
        _, _, _, failed, r_bad = _block(model, sizes[block], _rng(seed, block))
        return failed, r_bad

    workers = min(worker_count(), len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(b) for b in range(len(sizes))]
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def estimates(tests_failed: np.ndarray, r_bad: np.ndarray, delta: int,
              seed: int) -> tuple[Estimate, Estimate]:
    accepted = tests_failed <= delta
    n = tests_failed.shape[0]
    return (Estimate.bernoulli(int(accepted.sum()), n, seed),
            Estimate.bernoulli(int((accepted & r_bad).sum()), n, seed))


def run_protocol(cfg: ProtocolConfig, source: states.SourceModel, trials: int,
                 seed: int) -> tuple[Estimate, Estimate]:
    """Estimate the acceptance probability and ``Tr[(1 - Pi)_r (x) M_ACC rho]``."""
    failed, r_bad = sample_counts(cfg, source, trials, seed)
    return estimates(failed, r_bad, cfg.delta, seed)


def sample_trials(cfg: ProtocolConfig, source: states.SourceModel, trials: int,
                  seed: int) -> list[TrialOutcome]:
    """Individual trials with transcripts ``(copy, stabiliser, +/-1)``; copies are 1-based.

    Uses the same blocks and streams as :func:`run_protocol`.
    """
    model = copy_model(cfg, source)
    out = []
    for block, start in enumerate(range(0, trials, CHUNK_TRIALS)):
        n = min(CHUNK_TRIALS, trials - start)
        r, stab, passed, failed, r_bad = _block(model, n, _rng(seed, block))
        for t in range(n):
            transcript = tuple(
                (i + 1, model.stabilisers[stab[t, i]], 1 if passed[t, i] else -1)
                for i in range(cfg.S) if i != r[t])
            out.append(TrialOutcome(bool(failed[t] <= cfg.delta), int(failed[t]),
                                    bool(r_bad[t]), int(r[t]) + 1, transcript))
    return out


def analytic_expectation(cfg: ProtocolConfig, source: states.SourceModel) -> tuple[float, float]:
    """Closed-form ``(acceptance, failure)`` that the estimators converge to."""
    if isinstance(source, states.IdealSource):
        return bounds.completeness(cfg), 0.0
    if isinstance(source, states.WernerSource):
        acc = bounds.werner_acceptance(cfg, source.v, source.eta)
        fid = linalg.trace_product(states.bell_projector(), source.state()).real
        return acc, (1 - fid) * acc
    if isinstance(source, states.AdversarialSource):
        copy_states(cfg, source)  # validates the bad state
        fail = bounds.eigenvalue_g(cfg, source.k) if source.k else 0.0
        return bounds.adversarial_acceptance(cfg, source.k), fail
    raise ContractViolation(f"unknown source model {source!r}")


# -- sweeps --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SweepPoint:
    cfg: ProtocolConfig
    source: states.SourceModel


@dataclass(frozen=True)
class SweepRow:
    point: SweepPoint
    acceptance: Estimate
    failure: Estimate


def derive_seed(master: int, index: int) -> int:
    """Seed of sweep group ``index``: ``SeedSequence([master, index])`` hashed to 63 bits."""
    state = np.random.SeedSequence([master, index]).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def _group_key(point: SweepPoint):
    src = point.source
    if isinstance(src, states.AdversarialSource):
        bad = None if src.bad_state is None else np.asarray(src.bad_state).tobytes()
        src_key = ("adversarial", src.k, bad)
    else:
        src_key = (type(src).__name__, src)
    return (point.cfg.S, point.cfg.p, point.cfg.graph, src_key)


def sweep(points: Sequence[SweepPoint], trials: int, seed: int) -> list[SweepRow]:
    """Simulate every grid point; points differing only in ``delta`` share transcripts.

    Groups are numbered by first appearance and seeded with
    ``derive_seed(seed, group_index)``, so acceptance is monotone in ``delta``
    within a group for any seed.
    """
    if not points:
        raise ContractViolation("empty sweep grid")
    groups: dict = {}
    for point in points:
        groups.setdefault(_group_key(point), len(groups))
    samples = {}
    rows = []
    for point in points:
        gi = groups[_group_key(point)]
        if gi not in samples:
            s = derive_seed(seed, gi)
            samples[gi] = (s, *sample_counts(point.cfg, point.source, trials, s))
        s, failed, r_bad = samples[gi]
        acc, fail = estimates(failed, r_bad, point.cfg.delta, s)
        rows.append(SweepRow(point, acc, fail))
    return rows


# -- teleportation -------------------------------------------------------------

_CORRECTIONS = (linalg.I2, linalg.X, linalg.Z, linalg.X @ linalg.Z)


def teleport(resource: np.ndarray, message) -> np.ndarray:
    """Standard teleportation of ``message`` through a two-qubit ``resource``.

    Bell measurement on (message, resource qubit A), Pauli correction on B for
    each outcome, outputs summed over outcomes. Register order is
    message, A, B.
    """
    resource = linalg.as_matrix(resource)
    if resource.shape != (4, 4) or not linalg.is_density_matrix(resource):
        raise ContractViolation("resource must be a two-qubit density matrix")
    psi = linalg.ket(message)
    if psi.shape != (2,) or abs(np.linalg.norm(psi) - 1) > 1e-10:
        raise ContractViolation("message must be a normalised single-qubit state vector")
    joint = np.kron(np.outer(psi, psi.conj()), resource)
    out = np.zeros((2, 2), dtype=complex)
    for bell, fix in zip(states.BELL_BASIS, _CORRECTIONS):
        proj = np.kron(np.outer(bell, bell.conj()), linalg.I2)
        post = (proj @ joint @ proj).reshape(4, 2, 4, 2)
        bob = np.einsum("ajak->jk", post)
        out += fix @ bob @ linalg.dagger(fix)
    return out


def fidelity(message, rho: np.ndarray) -> float:
    psi = linalg.ket(message)
    return float(np.real(psi.conj() @ rho @ psi))


def bell_fidelity(resource: np.ndarray) -> float:
    return float(np.real(states.PHI_PLUS.conj() @ resource @ states.PHI_PLUS))
