import itertools

import numpy as np
import pytest

from authverif import linalg, states
from authverif.errors import ContractViolation, OverlapError
from authverif.states import GraphSpec, PauliString

LINE3 = GraphSpec.from_edges(3, [(1, 2), (2, 3)])
TRIANGLE = GraphSpec.from_edges(3, [(1, 2), (2, 3), (1, 3)])


def all_graphs(n):
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    for mask in itertools.product((0, 1), repeat=len(pairs)):
        yield GraphSpec.from_edges(n, [e for e, bit in zip(pairs, mask) if bit])


# -- Pauli algebra -------------------------------------------------------------

def test_pauli_products_match_matrices():
    for a, b in itertools.product("IXYZ", repeat=2):
        pa, pb = PauliString(a), PauliString(b)
        np.testing.assert_allclose((pa * pb).matrix(), pa.matrix() @ pb.matrix(), atol=1e-12)


def test_xz_squared_sign_is_minus_yy():
    xz = PauliString("XX") * PauliString("ZZ")
    assert xz.letters == "YY" and xz.sign == -1


def test_imaginary_phase_has_no_sign():
    with pytest.raises(ContractViolation):
        (PauliString("X") * PauliString("Z")).sign


# -- Bell pair -----------------------------------------------------------------

def test_bell_projector_basics():
    pi = states.bell_projector()
    assert np.trace(pi).real == pytest.approx(1)
    np.testing.assert_allclose(pi @ states.PHI_PLUS, states.PHI_PLUS, atol=1e-12)
    assert linalg.is_projector(pi)


def test_bell_projector_equals_stabiliser_average():
    X, Z = linalg.X, linalg.Z
    ZX = Z @ X
    avg = (np.eye(4) + np.kron(X, X) + np.kron(Z, Z) + np.kron(ZX, ZX)) / 4
    np.testing.assert_allclose(states.bell_projector(), avg, atol=1e-12)


def test_bell_group_elements():
    group = states.bell_stabiliser_group()
    assert {str(e) for e in group} == {"+II", "+XX", "-YY", "+ZZ"}
    for m in group.matrices():
        np.testing.assert_allclose(m @ states.PHI_PLUS, states.PHI_PLUS, atol=1e-10)


# -- Werner states -------------------------------------------------------------

def test_werner_endpoints():
    np.testing.assert_allclose(states.werner_state(1, 0), states.bell_projector(), atol=1e-12)
    for eta in (0, 0.3, 1):
        np.testing.assert_allclose(states.werner_state(0, eta), np.eye(4) / 4, atol=1e-12)


@pytest.mark.parametrize("v,eta", [(0.3, 0.1), (0.9, 0.0), (1.0, 1.0), (0.5, 0.5)])
def test_werner_is_density_matrix(v, eta):
    rho = states.werner_state(v, eta)
    assert linalg.is_density_matrix(rho)
    assert linalg.hermitian_eigenvalues(rho)[-1] >= -1e-12


def test_werner_range_checks():
    with pytest.raises(ContractViolation):
        states.werner_state(1.1, 0)
    with pytest.raises(ContractViolation):
        states.WernerSource(0.5, -0.1)


# -- graphs ----------------------------------------------------------------------

def test_graph_spec_validation():
    with pytest.raises(ContractViolation):
        GraphSpec.from_edges(2, [(1, 1)])
    with pytest.raises(ContractViolation):
        GraphSpec.from_edges(3, [(1, 2), (2, 1)])
    with pytest.raises(ContractViolation):
        GraphSpec.from_edges(2, [(1, 3)])
    with pytest.raises(ContractViolation):
        GraphSpec(7)


def test_graph_spec_text_round_trip():
    text = "3\n1 2\n2 3\n"
    g = GraphSpec.parse(text)
    assert g == LINE3
    assert GraphSpec.parse(g.to_text()) == g
    assert GraphSpec.from_edge_string(3, "1-2,2-3") == g
    with pytest.raises(ContractViolation):
        GraphSpec.parse("2\n1 2 3\n")


def test_single_vertex_graph_is_plus_state():
    g = GraphSpec(1)
    plus = np.array([1, 1]) / np.sqrt(2)
    np.testing.assert_allclose(states.graph_state(g), np.outer(plus, plus), atol=1e-12)
    assert {str(e) for e in states.stabiliser_group(g)} == {"+I", "+X"}


def test_two_vertex_graph_state_stabilisers_and_local_equivalence():
    g = GraphSpec.from_edges(2, [(1, 2)])
    pi = states.graph_state(g)
    group = states.stabiliser_group(g)
    assert len(group) == 4
    for m in group.matrices():
        assert linalg.trace_product(m, pi).real == pytest.approx(1, abs=1e-12)
    # Hadamard on qubit 2 maps |G> to |Phi+>
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    u = np.kron(np.eye(2), h)
    np.testing.assert_allclose(u @ pi @ u.conj().T, states.bell_projector(), atol=1e-12)


def test_line_graph_projector_is_group_average():
    pi = states.graph_state(LINE3)
    assert np.trace(pi).real == pytest.approx(1)
    np.testing.assert_allclose(states.stabiliser_group(LINE3).projector(), pi, atol=1e-12)


def test_triangle_group_closed_under_multiplication():
    group = states.stabiliser_group(TRIANGLE)
    assert len(group) == 8
    for a, b in itertools.product(group, repeat=2):
        assert a * b in group


def test_graph_state_matches_cz_circuit():
    g = TRIANGLE
    plus = np.ones(8) / np.sqrt(8)
    state = plus.astype(complex)
    for u, v in g.edges:
        cz = np.eye(8, dtype=complex)
        for idx in range(8):
            if (idx >> (3 - u)) & 1 and (idx >> (3 - v)) & 1:
                cz[idx, idx] = -1
        state = cz @ state
    np.testing.assert_allclose(states.graph_state_vector(g), state, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_every_graph_group_properties(n):
    for g in all_graphs(n):
        group = states.stabiliser_group(g)
        pi = states.graph_state(g)
        vec = states.graph_state_vector(g)
        assert len(group) == 2**n
        assert PauliString("I" * n) in group
        np.testing.assert_allclose(group.projector(), pi, atol=1e-12)
        for gen in g.generators():
            np.testing.assert_allclose(gen.matrix() @ vec, vec, atol=1e-10)
        for a in group:
            assert (a * a).letters == "I" * n and (a * a).phase == 0
        for a, b in itertools.combinations(group, 2):
            assert a.commutes_with(b)


def test_five_qubit_ring_group_average():
    g = GraphSpec.from_edges(5, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1)])
    np.testing.assert_allclose(states.stabiliser_group(g).projector(), states.graph_state(g), atol=1e-12)


# -- orthogonal bad states -----------------------------------------------------

def test_phi_minus_default():
    rho = states.orthogonal_bad_state()
    np.testing.assert_allclose(rho, linalg.projector(states.PHI_MINUS), atol=1e-12)
    assert linalg.trace_product(states.bell_projector(), rho).real == pytest.approx(0, abs=1e-12)


def test_custom_bad_state_accepted():
    ket01 = np.array([0, 1, 0, 0])
    rho = np.outer(ket01, ket01)
    np.testing.assert_allclose(states.orthogonal_bad_state(rho), rho)


def test_custom_bad_state_overlap_rejected():
    with pytest.raises(OverlapError):
        states.orthogonal_bad_state(states.bell_projector())


def test_graph_bad_state_orthogonal():
    for g in (LINE3, TRIANGLE, GraphSpec(1)):
        bad = states.graph_bad_state(g)
        assert linalg.trace_product(states.graph_state(g), bad).real == pytest.approx(0, abs=1e-12)
