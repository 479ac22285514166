"""Target states, stabiliser groups and source models.

Qubit convention: qubit 1 is the leftmost Kronecker factor, i.e. the most
significant bit of a computational-basis index. Pauli phases are tracked as
integer powers of ``i`` so signs in products such as ``XZ (x) XZ = -YY`` are
exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import linalg
from .errors import ContractViolation, DimensionCapError, OverlapError

N_MAX = 6

_PAULI_MATRICES = {"I": linalg.I2, "X": linalg.X, "Y": linalg.Y, "Z": linalg.Z}

# (a, b) -> (power of i, letter) for the single-qubit product a*b
_PRODUCT = {
    ("I", "I"): (0, "I"), ("I", "X"): (0, "X"), ("I", "Y"): (0, "Y"), ("I", "Z"): (0, "Z"),
    ("X", "I"): (0, "X"), ("X", "X"): (0, "I"), ("X", "Y"): (1, "Z"), ("X", "Z"): (3, "Y"),
    ("Y", "I"): (0, "Y"), ("Y", "X"): (3, "Z"), ("Y", "Y"): (0, "I"), ("Y", "Z"): (1, "X"),
    ("Z", "I"): (0, "Z"), ("Z", "X"): (1, "Y"), ("Z", "Y"): (3, "X"), ("Z", "Z"): (0, "I"),
}


@dataclass(frozen=True)
class PauliString:
    """A Pauli operator ``i**phase * P_1 (x) ... (x) P_n``."""

    letters: str
    phase: int = 0

    def __post_init__(self):
        if not self.letters or set(self.letters) - set("IXYZ"):
            raise ContractViolation(f"invalid Pauli letters {self.letters!r}")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def parse(cls, label: str) -> "PauliString":
        """Parse labels such as ``"XZ"``, ``"+XX"`` or ``"-YY"``."""
        phase = 0
        if label[:1] in "+-":
            phase = 2 if label[0] == "-" else 0
            label = label[1:]
        return cls(label, phase)

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def sign(self) -> int:
        if self.phase == 0:
            return 1
        if self.phase == 2:
            return -1
        raise ContractViolation(f"{self} has imaginary phase; it is not Hermitian")

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n != other.n:
            raise ContractViolation("Pauli strings act on different qubit counts")
        phase = self.phase + other.phase
        out = []
        for a, b in zip(self.letters, other.letters):
            k, c = _PRODUCT[a, b]
            phase += k
            out.append(c)
        return PauliString("".join(out), phase)

    def commutes_with(self, other: "PauliString") -> bool:
        anti = sum(a != "I" and b != "I" and a != b for a, b in zip(self.letters, other.letters))
        return anti % 2 == 0

    def matrix(self) -> np.ndarray:
        m = linalg.kron_all(_PAULI_MATRICES[c] for c in self.letters)
        return (1j ** self.phase) * m

    def __str__(self) -> str:
        prefix = {0: "+", 1: "+i", 2: "-", 3: "-i"}[self.phase]
        return prefix + self.letters


@dataclass(frozen=True)
class StabiliserGroup:
    """All ``2**m`` products of ``m`` independent commuting generators."""

    elements: tuple[PauliString, ...]

    @classmethod
    def from_generators(cls, generators) -> "StabiliserGroup":
        gens = [g if isinstance(g, PauliString) else PauliString.parse(g) for g in generators]
        if not gens:
            raise ContractViolation("need at least one generator")
        n = gens[0].n
        elements = []
        for mask in itertools.product((0, 1), repeat=len(gens)):
            prod = PauliString("I" * n)
            for bit, g in zip(mask, gens):
                if bit:
                    prod = prod * g
            elements.append(prod)
        if len({(e.letters, e.phase) for e in elements}) != len(elements):
            raise ContractViolation("generators are not independent")
        return cls(tuple(elements))

    @property
    def n(self) -> int:
        return self.elements[0].n

    @property
    def size(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, item: PauliString) -> bool:
        return any(e.letters == item.letters and e.phase == item.phase for e in self.elements)

    def matrices(self) -> list[np.ndarray]:
        return [e.matrix() for e in self.elements]

    def projector(self) -> np.ndarray:
        """Average of the group elements: the projector onto the stabilised space."""
        return sum(self.matrices()) / self.size


@dataclass(frozen=True)
class GraphSpec:
    """Simple undirected graph on vertices ``1..n``."""

    n: int
    edges: frozenset = field(default_factory=frozenset)
    n_max: int = N_MAX

    def __post_init__(self):
        if not 1 <= self.n <= self.n_max:
            raise ContractViolation(f"graph size n={self.n} outside 1..{self.n_max}")
        seen = set()
        for e in self.edges:
            u, v = sorted(e)
            if u == v:
                raise ContractViolation(f"self-loop on vertex {u}")
            if not (1 <= u <= self.n and 1 <= v <= self.n):
                raise ContractViolation(f"edge {u}-{v} outside vertices 1..{self.n}")
            seen.add((u, v))
        object.__setattr__(self, "edges", frozenset(seen))

    @classmethod
    def from_edges(cls, n: int, edges, n_max: int = N_MAX) -> "GraphSpec":
        pairs = [tuple(sorted(e)) for e in edges]
        if len(set(pairs)) != len(pairs):
            raise ContractViolation("duplicate edge")
        return cls(n, frozenset(pairs), n_max)

    @classmethod
    def parse(cls, text: str, n_max: int = N_MAX) -> "GraphSpec":
        """Parse ``n`` on the first line followed by one ``u v`` pair per line."""
        lines = [ln.split("#")[0].strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines:
            raise ContractViolation("empty graph description")
        try:
            n = int(lines[0])
            edges = [tuple(int(t) for t in ln.split()) for ln in lines[1:]]
        except ValueError as exc:
            raise ContractViolation(f"malformed graph description: {exc}") from None
        if any(len(e) != 2 for e in edges):
            raise ContractViolation("each edge line needs exactly two vertices")
        return cls.from_edges(n, edges, n_max)

    @classmethod
    def from_edge_string(cls, n: int, spec: str, n_max: int = N_MAX) -> "GraphSpec":
        """Parse the compact CLI form ``"1-2,2-3"``."""
        edges = []
        for chunk in filter(None, (c.strip() for c in spec.split(","))):
            try:
                u, v = (int(t) for t in chunk.split("-"))
            except ValueError:
                raise ContractViolation(f"malformed edge {chunk!r}") from None
            edges.append((u, v))
        return cls.from_edges(n, edges, n_max)

    def to_text(self) -> str:
        return "\n".join([str(self.n)] + [f"{u} {v}" for u, v in sorted(self.edges)]) + "\n"

    def neighbours(self, i: int) -> set[int]:
        return {v if u == i else u for u, v in self.edges if i in (u, v)}

    def generators(self) -> list[PauliString]:
        """``K_i = X_i prod_{j in N(i)} Z_j`` for every vertex."""
        gens = []
        for i in range(1, self.n + 1):
            letters = ["I"] * self.n
            letters[i - 1] = "X"
            for j in self.neighbours(i):
                letters[j - 1] = "Z"
            gens.append(PauliString("".join(letters)))
        return gens

    @property
    def dim(self) -> int:
        return 2**self.n


# -- Bell pair ---------------------------------------------------------------

PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
PHI_MINUS = np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2)
PSI_PLUS = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)
PSI_MINUS = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
BELL_BASIS = (PHI_PLUS, PSI_PLUS, PHI_MINUS, PSI_MINUS)


def bell_projector() -> np.ndarray:
    return linalg.projector(PHI_PLUS)


def bell_stabiliser_group() -> StabiliserGroup:
    """``{II, XX, -YY, ZZ}``, generated by ``XX`` and ``ZZ``."""
    return StabiliserGroup.from_generators(["XX", "ZZ"])


def werner_state(v: float, eta: float) -> np.ndarray:
    """Bell state mixed with dephasing weight ``eta`` and white noise ``1 - v``."""
    if not (0 <= v <= 1 and 0 <= eta <= 1):
        raise ContractViolation(f"werner parameters out of range: v={v}, eta={eta}")
    phi_p = linalg.projector(PHI_PLUS)
    phi_m = linalg.projector(PHI_MINUS)
    return v * ((1 - eta) * phi_p + eta * phi_m) + (1 - v) * linalg.identity(4) / 4


# -- graph states ------------------------------------------------------------

def graph_state_vector(g: GraphSpec, cap: int = linalg.DIM_CAP) -> np.ndarray:
    """CZ on every edge applied to ``|+>^n``."""
    if g.dim > cap:
        raise DimensionCapError(f"graph state dimension {g.dim} exceeds cap {cap}")
    n = g.n
    idx = np.arange(g.dim)
    bits = [(idx >> (n - q)) & 1 for q in range(1, n + 1)]
    parity = np.zeros(g.dim, dtype=int)
    for u, v in g.edges:
        parity ^= bits[u - 1] & bits[v - 1]
    return np.where(parity, -1.0, 1.0).astype(complex) / np.sqrt(g.dim)


def graph_state(g: GraphSpec, cap: int = linalg.DIM_CAP) -> np.ndarray:
    return linalg.projector(graph_state_vector(g, cap))


def stabiliser_group(g: GraphSpec) -> StabiliserGroup:
    return StabiliserGroup.from_generators(g.generators())


def graph_bad_state(g: GraphSpec, qubit: int = 1) -> np.ndarray:
    """``Z_q |G>``: orthogonal to ``|G>`` since ``Z_q`` anticommutes with ``K_q``."""
    letters = ["I"] * g.n
    letters[qubit - 1] = "Z"
    zq = PauliString("".join(letters)).matrix()
    vec = zq @ graph_state_vector(g)
    return linalg.projector(vec)


def orthogonal_bad_state(state: Optional[np.ndarray] = None,
                         target: Optional[np.ndarray] = None) -> np.ndarray:
    """A density matrix supported on the complement of ``target``.

    With no ``state`` this is ``|Phi-><Phi-|`` (the target must then be the
    Bell projector). A custom state is validated and returned unchanged.

    Raises:
        OverlapError: if ``Tr(target state) > 1e-10``.
    """
    if target is None:
        target = bell_projector()
    if state is None:
        if target.shape != (4, 4):
            raise ContractViolation("the Phi- default only applies to the Bell pair")
        state = linalg.projector(PHI_MINUS)
    state = linalg.as_matrix(state)
    if not linalg.is_density_matrix(state):
        raise ContractViolation("bad state is not a density matrix")
    overlap = linalg.trace_product(target, state).real
    if overlap > linalg.HERMITIAN_TOL:
        raise OverlapError(f"bad state overlaps the target projector: Tr = {overlap:.3g}")
    return state


# -- source models -----------------------------------------------------------

@dataclass(frozen=True)
class IdealSource:
    """Every copy is the target state."""


@dataclass(frozen=True)
class WernerSource:
    """Every copy is ``werner_state(v, eta)`` (Bell family only)."""

    v: float
    eta: float = 0.0

    def __post_init__(self):
        if not (0 <= self.v <= 1 and 0 <= self.eta <= 1):
            raise ContractViolation(f"werner parameters out of range: v={self.v}, eta={self.eta}")

    def state(self) -> np.ndarray:
        return werner_state(self.v, self.eta)


@dataclass(frozen=True, eq=False)
class AdversarialSource:
    """``k`` copies of an orthogonal bad state, the remaining copies ideal.

    ``bad_state=None`` selects the family default (``|Phi->`` for the Bell
    pair, ``Z_1|G>`` for graphs).
    """

    k: int
    bad_state: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.k < 0:
            raise ContractViolation(f"number of bad copies must be non-negative, got {self.k}")


SourceModel = Union[IdealSource, WernerSource, AdversarialSource]
